//! Sliding-window data buffer and least-squares identification of `[B, A]`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lqr::PlantModel;
use crate::numerics::{pinv, Matrix, Vector};

/// One `(x_t, u_t, x_{t+1})` sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Triple {
    pub x: Vector,
    pub u: Vector,
    pub x_next: Vector,
}

/// The most recent `capacity` triples, oldest first.
#[derive(Debug, Clone)]
pub struct SlidingWindow {
    capacity: usize,
    n: usize,
    m: usize,
    triples: VecDeque<Triple>,
}

impl SlidingWindow {
    pub fn new(capacity: usize, n: usize, m: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Domain("window capacity must be positive".into()));
        }
        Ok(Self {
            capacity,
            n,
            m,
            triples: VecDeque::with_capacity(capacity + 1),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.triples.len() == self.capacity
    }

    pub fn triples(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn push(&mut self, x: &Vector, u: &Vector, x_next: &Vector) -> Result<()> {
        if x.len() != self.n || x_next.len() != self.n {
            return Err(Error::dim("SlidingWindow::push (state)", self.n, x.len().max(x_next.len())));
        }
        if u.len() != self.m {
            return Err(Error::dim("SlidingWindow::push (input)", self.m, u.len()));
        }
        self.triples.push_back(Triple {
            x: x.clone(),
            u: u.clone(),
            x_next: x_next.clone(),
        });
        if self.triples.len() > self.capacity {
            self.triples.pop_front();
        }
        Ok(())
    }

    /// `(D, Y)` with `D` stacking `[u_j; x_j]` column-wise in time order and
    /// `Y` the matching successors.
    pub fn regressor(&self) -> Result<(Matrix, Matrix)> {
        if self.triples.is_empty() {
            return Err(Error::Domain("regressor of an empty window".into()));
        }
        let len = self.triples.len();
        let (n, m) = (self.n, self.m);
        let mut d = Matrix::zeros(m + n, len);
        let mut y = Matrix::zeros(n, len);
        for (j, tr) in self.triples.iter().enumerate() {
            d.view_mut((0, j), (m, 1)).copy_from(&tr.u);
            d.view_mut((m, j), (n, 1)).copy_from(&tr.x);
            y.column_mut(j).copy_from(&tr.x_next);
        }
        Ok((d, y))
    }

    /// Full row rank of `D` under the pseudoinverse cutoff, plus `σ_min(D)`.
    pub fn is_informative(&self) -> (bool, f64) {
        let Ok((d, _)) = self.regressor() else {
            return (false, 0.0);
        };
        let q = self.m + self.n;
        let (_, rank, sv) = pinv(&d);
        let sigma_min = if d.ncols() < q {
            0.0
        } else {
            sv.last().copied().unwrap_or(0.0)
        };
        (d.ncols() >= q && rank == q, sigma_min)
    }

    /// `[B̂, Â] = Y D†`.
    pub fn identify(&self) -> Result<ModelEstimate> {
        let (d, y) = self.regressor()?;
        let q = self.m + self.n;
        let (d_pinv, rank, sv) = pinv(&d);
        let g = y * d_pinv;
        let informative = d.ncols() >= q && rank == q;
        let smallest_singular_value = if d.ncols() < q {
            0.0
        } else {
            sv.last().copied().unwrap_or(0.0)
        };
        Ok(ModelEstimate {
            model: PlantModel::from_stacked(&g, self.m)?,
            informative,
            smallest_singular_value,
        })
    }
}

/// An identified model; untrusted unless `informative`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEstimate {
    pub model: PlantModel,
    pub informative: bool,
    pub smallest_singular_value: f64,
}
