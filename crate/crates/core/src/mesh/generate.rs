use super::{BoundaryTag, ElementKind, Mesh};
use crate::error::{invalid, Result};
use crate::scalar::{Real, Vec2};

/// Uniform structured grid of an axis-aligned rectangle, tagged
/// `left`/`right`/`bottom`/`top`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuredSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub origin: [f64; 2],
    pub kind: ElementKind,
}

impl StructuredSpec {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Self {
        StructuredSpec {
            nx,
            ny,
            lx,
            ly,
            origin: [0.0, 0.0],
            kind: ElementKind::Quad,
        }
    }

    pub fn origin(mut self, origin: [f64; 2]) -> Self {
        self.origin = origin;
        self
    }

    pub fn kind(mut self, kind: ElementKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn quad(self) -> Self {
        self.kind(ElementKind::Quad)
    }

    pub fn tri(self) -> Self {
        self.kind(ElementKind::Tri)
    }

    pub fn build<T: Real>(&self) -> Result<Mesh<T>> {
        if self.nx == 0 || self.ny == 0 {
            return invalid("structured grid needs at least one cell per direction");
        }
        if !(self.lx > 0.0 && self.ly > 0.0) || !self.lx.is_finite() || !self.ly.is_finite() {
            return invalid(format!(
                "structured grid extents must be positive, got {} x {}",
                self.lx, self.ly
            ));
        }
        let line = |o: f64, l: f64, n: usize| -> Vec<T> {
            (0..=n)
                .map(|i| T::lit(o) + T::lit(l) * T::from_count(i) / T::from_count(n))
                .collect()
        };
        RectilinearGrid {
            xs: line(self.origin[0], self.lx, self.nx),
            ys: line(self.origin[1], self.ly, self.ny),
            kind: self.kind,
        }
        .build(|_, _| true, |_, side| side.name().to_string())
    }
}

/// Side of a rectilinear cell a boundary face lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Bottom => "bottom",
            Side::Top => "top",
        }
    }
}

/// Tensor grid with arbitrary (sorted) grid lines from which cells can be
/// masked out. Used for graded and L-shaped domains.
#[derive(Debug, Clone)]
pub struct RectilinearGrid<T> {
    pub xs: Vec<T>,
    pub ys: Vec<T>,
    pub kind: ElementKind,
}

impl<T: Real> RectilinearGrid<T> {
    /// `keep(i, j)` selects cell `[xs[i], xs[i+1]] x [ys[j], ys[j+1]]`.
    /// `tag(midpoint, side)` names each exposed cell face.
    pub fn build(
        &self,
        keep: impl Fn(usize, usize) -> bool,
        tag: impl Fn(Vec2<T>, Side) -> String,
    ) -> Result<Mesh<T>> {
        let (nx, ny) = (
            self.xs.len().saturating_sub(1),
            self.ys.len().saturating_sub(1),
        );
        if nx == 0 || ny == 0 {
            return invalid("rectilinear grid needs at least two lines per direction");
        }
        if self.xs.windows(2).any(|w| w[1] <= w[0]) || self.ys.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("grid lines must be strictly increasing");
        }
        let cell = |i: isize, j: isize| -> bool {
            i >= 0
                && j >= 0
                && (i as usize) < nx
                && (j as usize) < ny
                && keep(i as usize, j as usize)
        };

        let grid_id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut used = vec![false; (nx + 1) * (ny + 1)];
        for j in 0..ny {
            for i in 0..nx {
                if cell(i as isize, j as isize) {
                    for (a, b) in [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)] {
                        used[grid_id(a, b)] = true;
                    }
                }
            }
        }
        let mut number = vec![usize::MAX; used.len()];
        let mut coords = Vec::new();
        for j in 0..=ny {
            for i in 0..=nx {
                if used[grid_id(i, j)] {
                    number[grid_id(i, j)] = coords.len();
                    coords.push([self.xs[i], self.ys[j]]);
                }
            }
        }
        let id = |i: usize, j: usize| number[grid_id(i, j)];

        let mut elements = Vec::new();
        let mut boundary = Vec::new();
        let half = T::lit(0.5);
        for j in 0..ny {
            for i in 0..nx {
                if !cell(i as isize, j as isize) {
                    continue;
                }
                let (n00, n10, n11, n01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                match self.kind {
                    ElementKind::Quad => elements.push(vec![n00, n10, n11, n01]),
                    ElementKind::Tri => {
                        elements.push(vec![n00, n10, n11]);
                        elements.push(vec![n00, n11, n01]);
                    }
                }
                let (ii, jj) = (i as isize, j as isize);
                let xm = (self.xs[i] + self.xs[i + 1]) * half;
                let ym = (self.ys[j] + self.ys[j + 1]) * half;
                let faces = [
                    (!cell(ii, jj - 1), n00, n10, [xm, self.ys[j]], Side::Bottom),
                    (
                        !cell(ii + 1, jj),
                        n10,
                        n11,
                        [self.xs[i + 1], ym],
                        Side::Right,
                    ),
                    (!cell(ii, jj + 1), n11, n01, [xm, self.ys[j + 1]], Side::Top),
                    (!cell(ii - 1, jj), n01, n00, [self.xs[i], ym], Side::Left),
                ];
                for (exposed, a, b, mid, side) in faces {
                    if exposed {
                        boundary.push((a, b, BoundaryTag::new(tag(mid, side))));
                    }
                }
            }
        }
        Mesh::new(self.kind, coords, elements, boundary)
    }
}
