//! Text and binary output formats. Numbers are written with `{:e}` so the
//! output is exact and identical across runs.

use std::io::{Read, Write};

use crate::analysis::grid::{GridSpec, ScalarField3D};
use crate::analysis::isosurface::IsoSurfaceMesh;
use crate::analysis::sweep::SweepTable;
use crate::dynamics::{Trajectory, TrajectoryPoint};
use crate::error::{Error, Result};
use crate::Vec3;

/// Magic bytes of the binary grid format.
pub const GRID_MAGIC: &[u8; 8] = b"QSGRID01";

/// ASCII PLY with vertices in metres.
pub fn write_ply(w: &mut (impl Write + ?Sized), vertices: &[Vec3], triangles: &[[usize; 3]], comment: &str) -> Result<()> {
    writeln!(w, "ply")?;
    writeln!(w, "format ascii 1.0")?;
    writeln!(w, "comment units: m")?;
    for line in comment.lines() {
        writeln!(w, "comment {line}")?;
    }
    writeln!(w, "element vertex {}", vertices.len())?;
    writeln!(w, "property double x")?;
    writeln!(w, "property double y")?;
    writeln!(w, "property double z")?;
    writeln!(w, "element face {}", triangles.len())?;
    writeln!(w, "property list uchar int vertex_indices")?;
    writeln!(w, "end_header")?;
    for v in vertices {
        writeln!(w, "{:e} {:e} {:e}", v.x, v.y, v.z)?;
    }
    for t in triangles {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    Ok(())
}

pub fn write_mesh_ply(w: &mut (impl Write + ?Sized), mesh: &IsoSurfaceMesh, comment: &str) -> Result<()> {
    write_ply(w, &mesh.vertices, &mesh.triangles, &format!("level {:e}\n{comment}", mesh.level))
}

/// Parsed ASCII PLY: (vertices, triangles).
pub fn read_ply(r: &mut impl Read) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let bad = |m: &str| Error::Io(format!("malformed PLY: {m}"));
    let mut lines = text.lines();
    let (mut nv, mut nf) = (0usize, 0usize);
    for line in lines.by_ref() {
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            ["element", "vertex", n] => nv = n.parse().map_err(|_| bad("vertex count"))?,
            ["element", "face", n] => nf = n.parse().map_err(|_| bad("face count"))?,
            ["end_header"] => break,
            _ => {}
        }
    }
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let c: Vec<f64> = lines
            .next()
            .ok_or_else(|| bad("missing vertex"))?
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| bad("vertex coordinate")))
            .collect::<Result<_>>()?;
        if c.len() != 3 {
            return Err(bad("vertex needs 3 coordinates"));
        }
        vertices.push(Vec3::new(c[0], c[1], c[2]));
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let c: Vec<usize> = lines
            .next()
            .ok_or_else(|| bad("missing face"))?
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| bad("face index")))
            .collect::<Result<_>>()?;
        if c.len() != 4 || c[0] != 3 || c[1..].iter().any(|&i| i >= nv) {
            return Err(bad("face must be a triangle with valid indices"));
        }
        triangles.push([c[1], c[2], c[3]]);
    }
    Ok((vertices, triangles))
}

/// Grid CSV: `x_m,y_m,z_m,value_<unit>,mask`, x fastest. `mask` is 1 for
/// valid nodes and 0 for excluded ones, whose value is written as NaN.
pub fn write_grid_csv(w: &mut (impl Write + ?Sized), field: &ScalarField3D, unit: &str) -> Result<()> {
    writeln!(w, "x_m,y_m,z_m,value_{unit},mask")?;
    for (k, (v, m)) in field.values.iter().zip(&field.mask).enumerate() {
        let (i, j, l) = field.spec.unflatten(k);
        let p = field.spec.node(i, j, l);
        writeln!(w, "{:e},{:e},{:e},{:e},{}", p.x, p.y, p.z, v, *m as u8)?;
    }
    Ok(())
}

/// Little-endian binary grid: magic, 3 x u64 node counts, 3 x f64 origin [m],
/// 3 x f64 spacing [m], then one f64 per node (x fastest, NaN where masked).
pub fn write_grid_binary(w: &mut (impl Write + ?Sized), field: &ScalarField3D) -> Result<()> {
    let spec = &field.spec;
    let h = spec.spacing();
    w.write_all(GRID_MAGIC)?;
    for n in spec.resolution {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    for c in spec.origin.iter().chain(h.iter()) {
        w.write_all(&c.to_le_bytes())?;
    }
    for v in &field.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_grid_binary(r: &mut impl Read) -> Result<ScalarField3D> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != GRID_MAGIC {
        return Err(Error::Io("not a binary grid file".into()));
    }
    let mut b = [0u8; 8];
    let mut res = [0usize; 3];
    for n in &mut res {
        r.read_exact(&mut b)?;
        *n = usize::try_from(u64::from_le_bytes(b)).map_err(|_| Error::Io("grid too large".into()))?;
    }
    let mut head = [0.0; 6];
    for c in &mut head {
        r.read_exact(&mut b)?;
        *c = f64::from_le_bytes(b);
    }
    let origin = Vec3::new(head[0], head[1], head[2]);
    let h = Vec3::new(head[3], head[4], head[5]);
    let extents = Vec3::from_fn(|i, _| h[i] * (res[i].max(2) - 1) as f64);
    let spec = GridSpec::new(origin, extents, res)?;
    let mut values = Vec::with_capacity(spec.len());
    for _ in 0..spec.len() {
        r.read_exact(&mut b)?;
        values.push(f64::from_le_bytes(b));
    }
    let mask = values.iter().map(|v| !v.is_nan()).collect();
    Ok(ScalarField3D { spec, values, mask })
}

/// Sweep CSV: `<parameter>_<unit>,<observable>_<unit>,error`.
pub fn write_sweep_csv(w: &mut (impl Write + ?Sized), table: &SweepTable) -> Result<()> {
    writeln!(
        w,
        "{}_{},{}_{},error",
        table.parameter, table.parameter_unit, table.observable, table.observable_unit
    )?;
    for r in &table.rows {
        let err = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        writeln!(w, "{:e},{:e},{}", r.value, r.observable, err)?;
    }
    Ok(())
}

pub const TRAJECTORY_HEADER: &str = "t_s,x_m,y_m,z_m,vx_m_per_s,vy_m_per_s,vz_m_per_s,u_J,eta";

fn trajectory_row(w: &mut (impl Write + ?Sized), p: &TrajectoryPoint) -> Result<()> {
    let (s, v) = (&p.state.position, &p.state.velocity);
    writeln!(
        w,
        "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
        p.state.time, s.x, s.y, s.z, v.x, v.y, v.z, p.u, p.eta
    )?;
    Ok(())
}

/// Trajectory CSV with [`TRAJECTORY_HEADER`].
pub fn write_trajectory_csv(w: &mut (impl Write + ?Sized), traj: &Trajectory) -> Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for p in &traj.points {
        trajectory_row(w, p)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field() -> ScalarField3D {
        let spec = GridSpec::new(Vec3::new(-1.0, 0.5, 2.0), Vec3::new(2.0, 1.0, 3.0), [3, 4, 5]).unwrap();
        ScalarField3D::from_fn(spec, |p| {
            if p.x > 0.5 {
                Err(Error::NotFound("masked".into()))
            } else {
                Ok(p.x * 1e-3 + p.y * p.z)
            }
        })
    }

    #[test]
    fn binary_grid_round_trip() {
        let f = field();
        let mut buf = Vec::new();
        write_grid_binary(&mut buf, &f).unwrap();
        assert_eq!(buf.len(), 8 + 24 + 48 + 8 * f.values.len());
        let g = read_grid_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(g.spec.resolution, f.spec.resolution);
        assert!((g.spec.origin - f.spec.origin).norm() < 1e-15);
        assert!((g.spec.spacing() - f.spec.spacing()).norm() < 1e-15);
        assert_eq!(g.mask, f.mask);
        for (a, b) in g.values.iter().zip(&f.values) {
            assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
        }
        assert!(read_grid_binary(&mut &b"NOTAGRID"[..]).is_err());
    }

    #[test]
    fn grid_csv_layout() {
        let f = field();
        let mut buf = Vec::new();
        write_grid_csv(&mut buf, &f, "J").unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x_m,y_m,z_m,value_J,mask");
        assert_eq!(lines.len(), 1 + f.values.len());
        assert!(lines[1].starts_with("-1e0,5e-1,2e0,") && lines[1].ends_with(",1"));
        assert!(lines[3].ends_with("NaN,0"));
    }

    #[test]
    fn ply_round_trip() {
        let v = vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1e-4, 0.0, 0.0), Vec3::new(0.0, 2.5e-4, -1.0)];
        let t = vec![[0, 1, 2]];
        let mut buf = Vec::new();
        write_ply(&mut buf, &v, &t, "test").unwrap();
        let (v2, t2) = read_ply(&mut buf.as_slice()).unwrap();
        assert_eq!(v, v2);
        assert_eq!(t, t2);
    }
}
