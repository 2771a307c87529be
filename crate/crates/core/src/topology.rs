//! Hexagonal cell layout and station placement.
//!
//! Nodes are addressed by a dense [`NodeId`]: the access points come first
//! (one per cell, in grid order), followed by the stations of cell 0, cell 1,
//! and so on.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn rotate(&self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(self.x * c - self.y * s, self.x * s + self.y * c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Ap,
    Sta,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Ap => write!(f, "AP"),
            Role::Sta => write!(f, "STA"),
        }
    }
}

/// Hexagonally packed cell centers with `rings` rings around the origin and
/// inter-center spacing `sqrt(3) * cell_radius`.
pub fn generate_hex_grid(rings: u32, cell_radius: f64) -> Result<Vec<Point>> {
    if !(cell_radius > 0.0 && cell_radius.is_finite()) {
        return Err(Error::config("cell_radius", "must be positive and finite"));
    }
    generate_hex_grid_with_spacing(rings, 3f64.sqrt() * cell_radius)
}

/// Same as [`generate_hex_grid`] with an explicit center-to-center spacing.
pub fn generate_hex_grid_with_spacing(rings: u32, spacing: f64) -> Result<Vec<Point>> {
    if rings > 2 {
        return Err(Error::config("rings", format!("{rings} not in {{0, 1, 2}}")));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::config("ap_spacing", "must be positive and finite"));
    }
    let r = rings as i32;
    // Axial hex coordinates, ordered by ring then by angle.
    let mut cells: Vec<(i32, f64, Point)> = Vec::new();
    for q in -r..=r {
        for s in -r..=r {
            let ring = q.abs().max(s.abs()).max((q + s).abs());
            if ring > r {
                continue;
            }
            let x = spacing * (q as f64 + s as f64 / 2.0);
            let y = spacing * (s as f64 * 3f64.sqrt() / 2.0);
            let angle = y.atan2(x).rem_euclid(2.0 * PI);
            cells.push((ring, angle, Point::new(x, y)));
        }
    }
    cells.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(cells.into_iter().map(|(_, _, p)| p).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    pub ap_positions: Vec<Point>,
    /// Station positions, grouped by cell.
    pub sta_positions: Vec<Vec<Point>>,
    /// Serving cell of every station, indexed by global station order.
    pub association: Vec<usize>,
    pub cell_radius: f64,
}

/// Drops `n_per_cell` stations uniformly over the disc of radius
/// `cell_radius` around each access point.
pub fn place_stations<R: Rng + ?Sized>(
    grid: &[Point],
    n_per_cell: usize,
    cell_radius: f64,
    rng: &mut R,
) -> Result<Topology> {
    if n_per_cell == 0 {
        return Err(Error::config("n_per_cell", "must be at least 1"));
    }
    if !(cell_radius > 0.0 && cell_radius.is_finite()) {
        return Err(Error::config("cell_radius", "must be positive and finite"));
    }
    let mut sta_positions = Vec::with_capacity(grid.len());
    let mut association = Vec::with_capacity(grid.len() * n_per_cell);
    for (cell, ap) in grid.iter().enumerate() {
        let stas = (0..n_per_cell)
            .map(|_| {
                // sqrt keeps the density uniform over area
                let radius = cell_radius * rng.gen::<f64>().sqrt();
                let angle = 2.0 * PI * rng.gen::<f64>();
                Point::new(ap.x + radius * angle.cos(), ap.y + radius * angle.sin())
            })
            .collect();
        sta_positions.push(stas);
        association.extend(std::iter::repeat_n(cell, n_per_cell));
    }
    Ok(Topology {
        ap_positions: grid.to_vec(),
        sta_positions,
        association,
        cell_radius,
    })
}

impl Topology {
    pub fn n_cells(&self) -> usize {
        self.ap_positions.len()
    }

    pub fn n_stas(&self) -> usize {
        self.association.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells() + self.n_stas()
    }

    pub fn ap(&self, cell: usize) -> NodeId {
        NodeId(cell)
    }

    pub fn role(&self, node: NodeId) -> Role {
        if node.0 < self.n_cells() {
            Role::Ap
        } else {
            Role::Sta
        }
    }

    pub fn cell_of(&self, node: NodeId) -> usize {
        match self.role(node) {
            Role::Ap => node.0,
            Role::Sta => self.association[node.0 - self.n_cells()],
        }
    }

    /// Global ids of the stations in `cell`.
    pub fn stas_in_cell(&self, cell: usize) -> impl Iterator<Item = NodeId> + '_ {
        let start: usize = self.n_cells() + self.sta_positions[..cell].iter().map(Vec::len).sum::<usize>();
        (start..start + self.sta_positions[cell].len()).map(NodeId)
    }

    pub fn position(&self, node: NodeId) -> Point {
        match self.role(node) {
            Role::Ap => self.ap_positions[node.0],
            Role::Sta => {
                let mut idx = node.0 - self.n_cells();
                for cell in &self.sta_positions {
                    if idx < cell.len() {
                        return cell[idx];
                    }
                    idx -= cell.len();
                }
                unreachable!("node id {node} out of range")
            }
        }
    }

    pub fn positions(&self) -> Vec<Point> {
        self.ap_positions
            .iter()
            .copied()
            .chain(self.sta_positions.iter().flatten().copied())
            .collect()
    }

    pub fn distance(&self, a: NodeId, b: NodeId) -> f64 {
        self.position(a).distance(&self.position(b))
    }

    /// Plain-text table, one node per line: `node role x y cell`.
    pub fn write_table<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "node\trole\tx\ty\tcell")?;
        for (i, p) in self.positions().iter().enumerate() {
            let node = NodeId(i);
            writeln!(
                w,
                "{}\t{}\t{:.4}\t{:.4}\t{}",
                i,
                self.role(node),
                p.x,
                p.y,
                self.cell_of(node)
            )?;
        }
        Ok(())
    }
}
