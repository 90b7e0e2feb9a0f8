//! On-disk formats.
//!
//! Binary files are little-endian and open with the magic `HHG1`, a format
//! version, a payload kind and a length-prefixed provenance string. 1D
//! series are CSV with `#` comment lines, a header row and values written
//! with 17 significant digits.

use std::io::{self, Read, Write};

use num_complex::Complex64;

use crate::ensemble::EnsembleRecord;
use crate::error::{Error, Result};
use crate::physics::{EnvironmentConfig, LaserParams};
use crate::spectra::GaborMap;
use crate::tdse::{Grid, Trajectory, Wavefunction};

pub const MAGIC: &[u8; 4] = b"HHG1";
pub const FORMAT_VERSION: u32 = 1;

/// Upper bound on any length prefix, guarding allocations on corrupt input.
const MAX_LEN: u64 = 1 << 34;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadKind {
    Wavefunction = 1,
    Map = 2,
    EnsembleRecord = 3,
}

impl PayloadKind {
    fn from_u32(v: u32) -> Result<Self> {
        match v {
            1 => Ok(Self::Wavefunction),
            2 => Ok(Self::Map),
            3 => Ok(Self::EnsembleRecord),
            other => Err(Error::Format(format!("unknown payload kind {other}"))),
        }
    }
}

/// Named axis with explicit coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub label: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Self {
        Self { label: label.into(), values }
    }

    pub fn uniform(label: impl Into<String>, start: f64, step: f64, len: usize) -> Self {
        Self::new(label, (0..len).map(|k| start + k as f64 * step).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Real values on `rows x cols`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Map2d {
    pub rows: Axis,
    pub cols: Axis,
    pub values: Vec<f64>,
}

impl Map2d {
    pub fn new(rows: Axis, cols: Axis, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows.len() * cols.len() {
            return Err(Error::Misaligned(format!(
                "{} values for a {} x {} map",
                values.len(),
                rows.len(),
                cols.len()
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols.len() + c]
    }
}

impl GaborMap {
    /// Rows are `tau`, columns harmonic order.
    pub fn to_map(&self) -> Map2d {
        Map2d {
            rows: Axis::new("tau", self.taus.clone()),
            cols: Axis::uniform("order", 0.0, self.order_step, self.n_orders),
            values: self.values.clone(),
        }
    }
}

struct Out<W> {
    inner: W,
}

impl<W: Write> Out<W> {
    fn u32(&mut self, v: u32) -> io::Result<()> {
        self.inner.write_all(&v.to_le_bytes())
    }
    fn u64(&mut self, v: u64) -> io::Result<()> {
        self.inner.write_all(&v.to_le_bytes())
    }
    fn f64(&mut self, v: f64) -> io::Result<()> {
        self.inner.write_all(&v.to_le_bytes())
    }
    fn len(&mut self, n: usize) -> io::Result<()> {
        self.u64(n as u64)
    }
    fn str(&mut self, s: &str) -> io::Result<()> {
        self.len(s.len())?;
        self.inner.write_all(s.as_bytes())
    }
    fn f64s(&mut self, values: &[f64]) -> io::Result<()> {
        self.len(values.len())?;
        let mut buf = Vec::with_capacity(values.len() * 8);
        for v in values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        self.inner.write_all(&buf)
    }
    fn complex(&mut self, values: &[Complex64]) -> io::Result<()> {
        let mut buf = Vec::with_capacity(values.len() * 16);
        for c in values {
            buf.extend_from_slice(&c.re.to_le_bytes());
            buf.extend_from_slice(&c.im.to_le_bytes());
        }
        self.inner.write_all(&buf)
    }
    fn header(&mut self, kind: PayloadKind, provenance: &str) -> io::Result<()> {
        self.inner.write_all(MAGIC)?;
        self.u32(FORMAT_VERSION)?;
        self.u32(kind as u32)?;
        self.str(provenance)
    }
    fn grid(&mut self, g: &Grid) -> io::Result<()> {
        self.f64(g.x_min)?;
        self.f64(g.x_max)?;
        self.u64(g.n as u64)
    }
    fn wavefunction(&mut self, psi: &Wavefunction) -> io::Result<()> {
        self.grid(&psi.grid)?;
        self.f64(psi.time)?;
        self.complex(&psi.amplitudes)
    }
}

struct In<R> {
    inner: R,
}

impl<R: Read> In<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.inner.read_exact(&mut b).map_err(truncated)?;
        Ok(b)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
    fn len(&mut self) -> Result<usize> {
        let n = self.u64()?;
        if n > MAX_LEN {
            return Err(Error::Format(format!("implausible length {n}")));
        }
        Ok(n as usize)
    }
    fn raw(&mut self, n: usize) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        (&mut self.inner).take(n as u64).read_to_end(&mut buf)?;
        if buf.len() != n {
            return Err(Error::Format("unexpected end of file".into()));
        }
        Ok(buf)
    }
    fn str(&mut self) -> Result<String> {
        let n = self.len()?;
        String::from_utf8(self.raw(n)?).map_err(|_| Error::Format("string is not UTF-8".into()))
    }
    fn f64s_of(&mut self, n: usize) -> Result<Vec<f64>> {
        let buf = self.raw(n * 8)?;
        Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }
    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.len()?;
        self.f64s_of(n)
    }
    fn complex(&mut self, n: usize) -> Result<Vec<Complex64>> {
        let flat = self.f64s_of(2 * n)?;
        Ok(flat.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect())
    }
    fn header(&mut self, expected: PayloadKind) -> Result<String> {
        if &self.bytes::<4>()? != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = self.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported format version {version}")));
        }
        let kind = PayloadKind::from_u32(self.u32()?)?;
        if kind != expected {
            return Err(Error::Format(format!("expected {expected:?} payload, found {kind:?}")));
        }
        self.str()
    }
    fn grid(&mut self) -> Result<Grid> {
        let x_min = self.f64()?;
        let x_max = self.f64()?;
        let n = self.len()?;
        Grid::new(x_min, x_max, n).map_err(|e| Error::Format(e.to_string()))
    }
    fn wavefunction(&mut self) -> Result<Wavefunction> {
        let grid = self.grid()?;
        let time = self.f64()?;
        let amplitudes = self.complex(grid.n)?;
        Ok(Wavefunction { grid, amplitudes, time })
    }
}

fn truncated(e: io::Error) -> Error {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        Error::Format("unexpected end of file".into())
    } else {
        Error::Io(e)
    }
}

pub fn write_wavefunction<W: Write>(w: W, psi: &Wavefunction, provenance: &str) -> Result<()> {
    let mut out = Out { inner: w };
    out.header(PayloadKind::Wavefunction, provenance)?;
    out.wavefunction(psi)?;
    Ok(())
}

/// Returns the state and the provenance string.
pub fn read_wavefunction<R: Read>(r: R) -> Result<(Wavefunction, String)> {
    let mut input = In { inner: r };
    let provenance = input.header(PayloadKind::Wavefunction)?;
    Ok((input.wavefunction()?, provenance))
}

pub fn write_map<W: Write>(w: W, map: &Map2d, provenance: &str) -> Result<()> {
    let mut out = Out { inner: w };
    out.header(PayloadKind::Map, provenance)?;
    for axis in [&map.rows, &map.cols] {
        out.str(&axis.label)?;
        out.f64s(&axis.values)?;
    }
    out.f64s(&map.values)?;
    Ok(())
}

pub fn read_map<R: Read>(r: R) -> Result<(Map2d, String)> {
    let mut input = In { inner: r };
    let provenance = input.header(PayloadKind::Map)?;
    let rows = Axis::new(input.str()?, input.f64s()?);
    let cols = Axis::new(input.str()?, input.f64s()?);
    let values = input.f64s()?;
    Ok((Map2d::new(rows, cols, values).map_err(|e| Error::Format(e.to_string()))?, provenance))
}

/// Laser, grid, probe times, then for each member its environment, the
/// three recorded series and its snapshots.
pub fn write_record<W: Write>(w: W, record: &EnsembleRecord, provenance: &str) -> Result<()> {
    let mut out = Out { inner: io::BufWriter::new(w) };
    out.header(PayloadKind::EnsembleRecord, provenance)?;
    let l = &record.laser;
    out.f64(l.amplitude)?;
    out.f64(l.omega)?;
    for c in [l.ramp_up, l.plateau, l.ramp_down] {
        out.u32(c)?;
    }
    out.grid(&record.grid)?;
    out.f64(record.ground_energy)?;
    out.f64s(&record.probe_times)?;
    out.len(record.members.len())?;
    for (env, member) in record.configurations.iter().zip(&record.members) {
        out.f64s(env.positions())?;
        out.f64(member.t_start)?;
        out.f64(member.dt)?;
        out.f64s(&member.position)?;
        out.f64s(&member.acceleration)?;
        out.f64s(&member.norm)?;
        out.len(member.snapshots.len())?;
        for snap in &member.snapshots {
            out.wavefunction(snap)?;
        }
    }
    out.inner.flush()?;
    Ok(())
}

pub fn read_record<R: Read>(r: R) -> Result<(EnsembleRecord, String)> {
    let mut input = In { inner: io::BufReader::new(r) };
    let provenance = input.header(PayloadKind::EnsembleRecord)?;
    let amplitude = input.f64()?;
    let omega = input.f64()?;
    let laser = LaserParams {
        amplitude,
        omega,
        ramp_up: input.u32()?,
        plateau: input.u32()?,
        ramp_down: input.u32()?,
    };
    let grid = input.grid()?;
    let ground_energy = input.f64()?;
    let probe_times = input.f64s()?;
    let n_c = input.len()?;
    let mut configurations = Vec::with_capacity(n_c.min(1 << 16));
    let mut members = Vec::with_capacity(n_c.min(1 << 16));
    for _ in 0..n_c {
        let positions = input.f64s()?;
        configurations.push(if positions.is_empty() {
            EnvironmentConfig::empty()
        } else {
            EnvironmentConfig::new(positions).map_err(|e| Error::Format(e.to_string()))?
        });
        let t_start = input.f64()?;
        let dt = input.f64()?;
        let position = input.f64s()?;
        let acceleration = input.f64s()?;
        let norm = input.f64s()?;
        let n_snap = input.len()?;
        let snapshots = (0..n_snap).map(|_| input.wavefunction()).collect::<Result<Vec<_>>>()?;
        members.push(Trajectory {
            t_start,
            dt,
            position,
            acceleration,
            norm,
            snapshots,
        });
    }
    let mut rest = [0u8; 1];
    if input.inner.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after record".into()));
    }
    Ok((
        EnsembleRecord {
            laser,
            grid,
            ground_energy,
            probe_times,
            configurations,
            members,
        },
        provenance,
    ))
}

/// Comment lines, header row and rows at full double precision.
pub fn write_csv<W: Write>(w: W, comments: &[String], columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = io::BufWriter::new(w);
    for c in comments {
        for line in c.lines() {
            writeln!(out, "# {line}")?;
        }
    }
    writeln!(out, "{}", columns.join(","))?;
    for row in rows {
        if row.len() != columns.len() {
            return Err(Error::Misaligned(format!("row of {} values for {} columns", row.len(), columns.len())));
        }
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Column-oriented helper around [`write_csv`].
pub fn write_columns<W: Write>(w: W, comments: &[String], columns: &[(&str, &[f64])]) -> Result<()> {
    let len = columns.first().map_or(0, |c| c.1.len());
    if columns.iter().any(|c| c.1.len() != len) {
        return Err(Error::Misaligned("columns differ in length".into()));
    }
    let names: Vec<&str> = columns.iter().map(|c| c.0).collect();
    let rows: Vec<Vec<f64>> = (0..len).map(|k| columns.iter().map(|c| c.1[k]).collect()).collect();
    write_csv(w, comments, &names, &rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Csv {
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Csv {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

pub fn parse_csv(text: &str) -> Result<Csv> {
    let mut comments = Vec::new();
    let mut columns: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(c) = line.strip_prefix('#') {
            comments.push(c.trim_start().to_string());
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        match &columns {
            None => columns = Some(line.split(',').map(|s| s.trim().to_string()).collect()),
            Some(cols) => {
                let row = line
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::Format(format!("line {}: {e}", i + 1)))?;
                if row.len() != cols.len() {
                    return Err(Error::Format(format!("line {}: expected {} fields", i + 1, cols.len())));
                }
                rows.push(row);
            }
        }
    }
    Ok(Csv {
        comments,
        columns: columns.ok_or(Error::Format("missing header row".into()))?,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_psi() -> Wavefunction {
        let grid = Grid::new(-5.0, 5.0, 16).unwrap();
        let mut psi = Wavefunction::gaussian(grid, 0.3, 1.0, 0.7);
        psi.time = 12.5;
        psi
    }

    #[test]
    fn wavefunction_round_trip() {
        let psi = sample_psi();
        let mut buf = Vec::new();
        write_wavefunction(&mut buf, &psi, "test v1").unwrap();
        assert_eq!(&buf[..4], MAGIC);
        assert_eq!(buf.len(), 4 + 4 + 4 + 8 + 7 + 8 + 8 + 8 + 8 + 16 * 16);
        let (back, prov) = read_wavefunction(buf.as_slice()).unwrap();
        assert_eq!(back, psi);
        assert_eq!(prov, "test v1");
    }

    #[test]
    fn rejects_wrong_kind_and_truncation() {
        let mut buf = Vec::new();
        write_wavefunction(&mut buf, &sample_psi(), "").unwrap();
        assert!(read_map(buf.as_slice()).is_err());
        assert!(matches!(read_wavefunction(&buf[..buf.len() - 3]), Err(Error::Format(_))));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_wavefunction(bad.as_slice()).is_err());
    }

    #[test]
    fn map_round_trip() {
        let map = Map2d::new(Axis::uniform("t", 0.0, 0.5, 3), Axis::new("x", vec![-1.0, 2.0]), (0..6).map(f64::from).collect()).unwrap();
        let mut buf = Vec::new();
        write_map(&mut buf, &map, "m").unwrap();
        assert_eq!(read_map(buf.as_slice()).unwrap().0, map);
        assert!(Map2d::new(Axis::new("a", vec![0.0]), Axis::new("b", vec![0.0]), vec![]).is_err());
    }

    #[test]
    fn record_round_trip() {
        let psi = sample_psi();
        let member = Trajectory {
            t_start: 0.0,
            dt: 0.2,
            position: vec![0.0, 0.1, -0.2],
            acceleration: vec![1.0, 2.0, 3.0],
            norm: vec![1.0, 1.0, 0.99],
            snapshots: vec![psi.clone(), psi],
        };
        let record = EnsembleRecord {
            laser: LaserParams::default(),
            grid: member.snapshots[0].grid,
            ground_energy: -0.9,
            probe_times: vec![12.5, 12.5],
            configurations: vec![EnvironmentConfig::new(vec![-3.0, 4.0]).unwrap(), EnvironmentConfig::empty()],
            members: vec![member.clone(), member],
        };
        let mut buf = Vec::new();
        write_record(&mut buf, &record, "run").unwrap();
        let (back, prov) = read_record(buf.as_slice()).unwrap();
        assert_eq!(back, record);
        assert_eq!(prov, "run");
        buf.push(0);
        assert!(read_record(buf.as_slice()).is_err());
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_columns(&mut buf, &["spectrum v1".into()], &[("order", &[0.0, 0.5]), ("magnitude", &[1.0, 1.0 / 3.0])]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# spectrum v1");
        assert_eq!(lines[1], "order,magnitude");
        assert_eq!(lines[3], "5.0000000000000000e-1,3.3333333333333331e-1");
        let csv = parse_csv(&text).unwrap();
        assert_eq!(csv.column("magnitude").unwrap(), vec![1.0, 1.0 / 3.0]);
        assert!(write_columns(Vec::new(), &[], &[("a", &[1.0]), ("b", &[])]).is_err());
    }

    proptest! {
        #[test]
        fn csv_values_round_trip_exactly(values in proptest::collection::vec(-1e300f64..1e300, 1..20)) {
            let mut buf = Vec::new();
            write_columns(&mut buf, &[], &[("v", &values)]).unwrap();
            let csv = parse_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
            prop_assert_eq!(csv.column("v").unwrap(), values);
        }
    }
}
