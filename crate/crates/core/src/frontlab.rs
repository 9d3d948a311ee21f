//! Grid evaluation of value functions, zero level sets, and front observables.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::geodesic::{geodesic_leave_time, LeftwardField};
use crate::geometry::{Disk, DomainGeometry};
use crate::probe::ValueSource;
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl BBox {
    pub fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        Self { x, y }
    }

    pub fn square(half: f64) -> Self {
        Self::new((-half, half), (-half, half))
    }
}

/// Values at the cell centres of an `nx × ny` grid, row-major in `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub bbox: BBox,
    pub nx: usize,
    pub ny: usize,
    pub t: f64,
    pub values: Vec<f64>,
    /// `true` where the centre lies in the closed domain and the value is finite.
    pub mask: Vec<bool>,
}

impl Field {
    pub fn cell_size(&self) -> (f64, f64) {
        ((self.bbox.x.1 - self.bbox.x.0) / self.nx as f64, (self.bbox.y.1 - self.bbox.y.0) / self.ny as f64)
    }

    pub fn center(&self, i: usize, j: usize) -> Point {
        let (dx, dy) = self.cell_size();
        Point::new(self.bbox.x.0 + (i as f64 + 0.5) * dx, self.bbox.y.0 + (j as f64 + 0.5) * dy)
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn value(&self, i: usize, j: usize) -> Option<f64> {
        let k = self.idx(i, j);
        self.mask[k].then_some(self.values[k])
    }

    /// Columnar text: `x y value mask`.
    pub fn to_columns(&self) -> String {
        let mut out = String::from("# x y value mask\n");
        for j in 0..self.ny {
            for i in 0..self.nx {
                let c = self.center(i, j);
                let k = self.idx(i, j);
                let _ = writeln!(out, "{} {} {} {}", c.x, c.y, self.values[k], u8::from(self.mask[k]));
            }
        }
        out
    }
}

pub fn evaluate_grid<U: ValueSource + ?Sized>(
    u: &U,
    dom: &DomainGeometry,
    bbox: BBox,
    resolution: (usize, usize),
    t: f64,
) -> Result<Field> {
    let (nx, ny) = resolution;
    if nx < 2 || ny < 2 {
        return Err(LabError::DomainError(format!("grid must be at least 2x2, got {nx}x{ny}")));
    }
    let mut field = Field { bbox, nx, ny, t, values: vec![f64::NAN; nx * ny], mask: vec![false; nx * ny] };
    let cells: Vec<(f64, bool)> = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let p = field.center(k % nx, k / nx);
            if !dom.contains_closure(&p, 0.0) {
                return (f64::NAN, false);
            }
            match u.value(&p, t) {
                Ok(v) if v.is_finite() => (v, true),
                _ => (f64::NAN, false),
            }
        })
        .collect();
    for (k, (v, m)) in cells.into_iter().enumerate() {
        field.values[k] = v;
        field.mask[k] = m;
    }
    Ok(field)
}

pub type Polyline = Vec<Point>;

/// Grid edge identifier: `(i, j, horizontal)` for the edge leaving centre `(i,j)`.
type EdgeId = (usize, usize, bool);

/// Marching squares on the dual grid of cell centres; squares touching a masked
/// centre are skipped.
pub fn extract_zero_level(field: &Field) -> Result<Vec<Polyline>> {
    let live = || field.values.iter().zip(&field.mask).filter(|(_, m)| **m).map(|(v, _)| *v);
    if !(live().any(|v| v > 0.0) && live().any(|v| v <= 0.0)) {
        return Err(LabError::EmptyContour);
    }
    let mut segments: Vec<(EdgeId, EdgeId)> = Vec::new();
    let mut points: HashMap<EdgeId, Point> = HashMap::new();
    let crossing = |a: (usize, usize), b: (usize, usize)| -> Point {
        let (pa, pb) = (field.center(a.0, a.1), field.center(b.0, b.1));
        let (va, vb) = (field.values[field.idx(a.0, a.1)], field.values[field.idx(b.0, b.1)]);
        let w = va / (va - vb);
        pa + w * (pb - pa)
    };
    for j in 0..field.ny - 1 {
        for i in 0..field.nx - 1 {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let Some(v) = corners.iter().map(|&(a, b)| field.value(a, b)).collect::<Option<Vec<f64>>>() else {
                continue;
            };
            let above: Vec<bool> = v.iter().map(|x| *x > 0.0).collect();
            // edges in order bottom, right, top, left, with their endpoint corners
            let edges: [(EdgeId, usize, usize); 4] =
                [((i, j, true), 0, 1), ((i + 1, j, false), 1, 2), ((i, j + 1, true), 3, 2), ((i, j, false), 0, 3)];
            let cut: Vec<usize> = (0..4).filter(|&e| above[edges[e].1] != above[edges[e].2]).collect();
            for &e in &cut {
                let (id, a, b) = edges[e];
                points.entry(id).or_insert_with(|| crossing(corners[a], corners[b]));
            }
            match cut.len() {
                2 => segments.push((edges[cut[0]].0, edges[cut[1]].0)),
                4 => {
                    // saddle: if the cell average sides with corners 0 and 2 they are
                    // joined through the middle, isolating corners 1 and 3
                    let centre_above = v.iter().sum::<f64>() / 4.0 > 0.0;
                    let pairs = if centre_above == above[0] { [(0, 1), (2, 3)] } else { [(0, 3), (1, 2)] };
                    segments.extend(pairs.map(|(a, b)| (edges[a].0, edges[b].0)));
                }
                _ => {}
            }
        }
    }
    if segments.is_empty() {
        return Err(LabError::EmptyContour);
    }
    Ok(join_segments(&segments, &points))
}

fn join_segments(segments: &[(EdgeId, EdgeId)], points: &HashMap<EdgeId, Point>) -> Vec<Polyline> {
    let mut incident: HashMap<EdgeId, Vec<usize>> = HashMap::new();
    for (k, (a, b)) in segments.iter().enumerate() {
        incident.entry(*a).or_default().push(k);
        incident.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    let next_from = |node: EdgeId, used: &[bool]| -> Option<usize> { incident[&node].iter().copied().find(|&s| !used[s]) };
    // start at open ends first so open chains come out whole
    let mut starts: Vec<usize> = (0..segments.len()).collect();
    starts.sort_by_key(|&k| {
        let (a, b) = segments[k];
        std::cmp::Reverse(usize::from(incident[&a].len() == 1) + usize::from(incident[&b].len() == 1))
    });
    for s in starts {
        if used[s] {
            continue;
        }
        used[s] = true;
        let (a, b) = segments[s];
        let (start, mut node) = if incident[&b].len() == 1 { (b, a) } else { (a, b) };
        let mut chain = vec![start, node];
        while let Some(k) = next_from(node, &used) {
            used[k] = true;
            let (p, q) = segments[k];
            node = if p == node { q } else { p };
            chain.push(node);
        }
        lines.push(chain.iter().map(|id| points[id]).collect());
    }
    lines
}

/// `max |x1 − (t − 2)|` over all contour vertices.
pub fn bowing_depth(contours: &[Polyline], t: f64) -> Result<f64> {
    let mut depth: Option<f64> = None;
    for p in contours.iter().flatten() {
        let d = (p.x - (t - 2.0)).abs();
        depth = Some(depth.map_or(d, |m| m.max(d)));
    }
    depth.ok_or(LabError::EmptyContour)
}

/// Time at which the front leaves `∂B_i`: `2 + max ℓ` over `samples` boundary points.
pub fn leave_time(disks: &[Disk], i: usize, samples: usize) -> Result<f64> {
    let disk = disks.get(i).ok_or_else(|| LabError::DomainError(format!("no disk with index {i}")))?;
    let field = LeftwardField::new(disks)?;
    Ok(geodesic_leave_time(&field, disk, samples.max(1000))?.0)
}

/// Polyline text: one `x y` vertex per row, polylines separated by blank lines.
pub fn contours_to_text(contours: &[Polyline]) -> String {
    let mut out = String::new();
    for (k, line) in contours.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        for p in line {
            let _ = writeln!(out, "{} {}", p.x, p.y);
        }
    }
    out
}
