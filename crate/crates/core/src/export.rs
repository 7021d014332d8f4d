//! CSV tables and a compact binary dump of trajectory ensembles.
//!
//! Binary layout (all little endian):
//!
//! | offset | size | content                                  |
//! |--------|------|------------------------------------------|
//! | 0      | 8    | magic `b"SHEQDUMP"`                      |
//! | 8      | 4    | format version (`u32`, currently 1)      |
//! | 12     | 4    | dtype code (`u32`, 1 = `f64`)            |
//! | 16     | 4    | rank `r` (`u32`, currently 3)            |
//! | 20     | 8·r  | dims (`u64`): paths, time levels, nodes   |
//! | ...    |      | values in row-major order                |
//!
//! A path is a terminal state together with its ancestors, so tree
//! ensembles are expanded to one row block per leaf.

use std::fmt::Write as _;

use crate::control::TreeField;
use crate::domain::SpatialGrid;
use crate::error::{Error, Result};
use crate::forward::TrajectoryEnsemble;
use crate::frequency::FrequencyTrace;
use crate::noise::TimeMesh;

pub const DUMP_MAGIC: &[u8; 8] = b"SHEQDUMP";
pub const DUMP_VERSION: u32 = 1;
pub const DTYPE_F64: u32 = 1;

/// Comma-separated table with a fixed header. Floats use the shortest
/// round-trip representation, so output is byte-stable.
pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn coord_columns(grid: &SpatialGrid) -> Vec<&'static str> {
    if grid.dim() == 1 {
        vec!["x"]
    } else {
        vec!["x", "y"]
    }
}

/// Ancestor of terminal state `s` at `level`.
fn ancestor(ens: &TrajectoryEnsemble, s: usize, level: usize) -> usize {
    let mut st = s;
    for _ in level..ens.steps() {
        st = ens.noise().parent(st);
    }
    st
}

/// Columns `t, x[, y], path, value`.
pub fn ensemble_csv(ens: &TrajectoryEnsemble) -> String {
    let grid = ens.grid();
    let mut header = vec!["t"];
    header.extend(coord_columns(grid));
    header.extend(["path", "value"]);
    let times = ens.mesh().times();
    let paths = ens.states(ens.steps());
    let mut rows = Vec::new();
    for p in 0..paths {
        for (k, t) in times.iter().enumerate() {
            let y = ens.state(k, ancestor(ens, p, k));
            for (i, v) in y.iter().enumerate() {
                let c = grid.coord(i);
                let mut row = vec![*t];
                row.extend(&c[..grid.dim()]);
                row.extend([p as f64, *v]);
                rows.push(row);
            }
        }
    }
    csv_table(&header, rows)
}

/// Columns `t, H, D, N, valid` (`N` is empty where `H` vanishes).
pub fn trace_csv(trace: &FrequencyTrace) -> String {
    let mut s = String::from("t,H,D,N,valid\n");
    for k in 0..trace.times.len() {
        let n = trace.n[k].map(|v| format!("{v}")).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{},{}", trace.times[k], trace.h[k], trace.d[k], n, u8::from(trace.valid(k)));
    }
    s
}

/// Columns `level, node, t, x[, y], value` for a field on the tree.
pub fn tree_field_csv(field: &TreeField, grid: &SpatialGrid, mesh: &TimeMesh) -> String {
    let n = grid.len();
    let mut header = vec!["level", "node", "t"];
    header.extend(coord_columns(grid));
    header.push("value");
    let mut rows = Vec::new();
    for k in 0..=field.depth() {
        let level = field.level(k);
        for (p, chunk) in level.chunks(n).enumerate() {
            for (i, v) in chunk.iter().enumerate() {
                let c = grid.coord(i);
                let mut row = vec![k as f64, p as f64, mesh.time(k)];
                row.extend(&c[..grid.dim()]);
                row.push(*v);
                rows.push(row);
            }
        }
    }
    csv_table(&header, rows)
}

pub fn binary_dump(ens: &TrajectoryEnsemble) -> Vec<u8> {
    let n = ens.grid().len();
    let levels = ens.steps() + 1;
    let paths = ens.states(ens.steps());
    let mut out = Vec::with_capacity(20 + 24 + 8 * paths * levels * n);
    out.extend_from_slice(DUMP_MAGIC);
    out.extend_from_slice(&DUMP_VERSION.to_le_bytes());
    out.extend_from_slice(&DTYPE_F64.to_le_bytes());
    out.extend_from_slice(&3u32.to_le_bytes());
    for d in [paths, levels, n] {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for p in 0..paths {
        for k in 0..levels {
            for v in ens.state(k, ancestor(ens, p, k)) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

/// Parses a dump back into `(dims, values)`.
pub fn read_binary_dump(bytes: &[u8]) -> Result<(Vec<usize>, Vec<f64>)> {
    let bad = |m: &str| Error::Shape(format!("binary dump: {m}"));
    if bytes.len() < 20 || &bytes[..8] != DUMP_MAGIC {
        return Err(bad("missing magic"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    if u32_at(8) != DUMP_VERSION || u32_at(12) != DTYPE_F64 {
        return Err(bad("unsupported version or dtype"));
    }
    let rank = u32_at(16) as usize;
    let data_at = 20 + 8 * rank;
    if bytes.len() < data_at {
        return Err(bad("truncated header"));
    }
    let dims: Vec<usize> = (0..rank).map(|i| u64::from_le_bytes(bytes[20 + 8 * i..28 + 8 * i].try_into().expect("8 bytes")) as usize).collect();
    let count: usize = dims.iter().product();
    if bytes.len() != data_at + 8 * count {
        return Err(bad("payload length does not match dims"));
    }
    let values = bytes[data_at..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok((dims, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{solve_forward, CoefficientField};
    use crate::noise::{build_tree, NoiseModel};

    fn small() -> TrajectoryEnsemble {
        let grid = SpatialGrid::interval(0.0, 1.0, 3).unwrap();
        let tree = build_tree(TimeMesh::new(0.1, 2).unwrap(), 16).unwrap();
        let c = CoefficientField::constant(0.2, 0.5, &grid, tree.mesh()).unwrap();
        solve_forward(&[1.0, 2.0, 1.0], &c, &NoiseModel::Tree(tree), &grid).unwrap()
    }

    #[test]
    fn dump_round_trips() {
        let ens = small();
        let bytes = binary_dump(&ens);
        let (dims, vals) = read_binary_dump(&bytes).unwrap();
        assert_eq!(dims, vec![4, 3, 3]);
        // path 3 (down, down) at level 1 is node 1
        assert_eq!(&vals[3 * 9 + 3..3 * 9 + 6], ens.state(1, 1));
        assert_eq!(&vals[..3], &[1.0, 2.0, 1.0]);
        assert!(read_binary_dump(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn csv_has_fixed_header_and_row_count() {
        let ens = small();
        let s = ensemble_csv(&ens);
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("t,x,path,value"));
        assert_eq!(lines.count(), 4 * 3 * 3);
        assert_eq!(csv_table(&["a"], vec![vec![0.5]]), "a\n0.5\n");
    }
}
