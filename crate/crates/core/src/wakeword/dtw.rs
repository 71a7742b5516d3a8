//! Dynamic time warping with Euclidean frame cost and steps (1,0), (0,1),
//! (1,1). The optimal path minimises total cost, ties going to the shorter
//! path; the distance is that cost divided by the path length.

use crate::error::WakeError;

pub fn frame_cost(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Accumulated (cost, path length) of a DTW cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Acc {
    pub cost: f64,
    pub len: u32,
}

impl Acc {
    const INF: Acc = Acc {
        cost: f64::INFINITY,
        len: u32::MAX,
    };

    #[inline]
    fn better(self, other: Acc) -> Acc {
        if other.cost < self.cost || (other.cost == self.cost && other.len < self.len) {
            other
        } else {
            self
        }
    }

    pub fn normalized(self) -> f64 {
        self.cost / self.len as f64
    }
}

fn check(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<usize, WakeError> {
    if a.is_empty() || b.is_empty() {
        return Err(WakeError::EmptyInput);
    }
    let dim = a[0].len();
    for row in a.iter().chain(b) {
        if row.len() != dim {
            return Err(WakeError::DimensionMismatch {
                a: dim,
                b: row.len(),
            });
        }
    }
    Ok(dim)
}

/// Path-length-normalised DTW distance between two feature matrices.
pub fn dtw_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64, WakeError> {
    check(a, b)?;
    let last = dtw_end_row(a.len(), b.len(), |i, j| frame_cost(&a[i], &b[j]));
    Ok(last[b.len() - 1].normalized())
}

/// Runs the DTW recursion over an `rows x cols` cost grid and returns the
/// accumulated values of the final row, i.e. every alignment of all `rows`
/// frames against the first `j + 1` columns.
pub(crate) fn dtw_end_row(
    rows: usize,
    cols: usize,
    cost: impl Fn(usize, usize) -> f64,
) -> Vec<Acc> {
    // Column-major sweep keeps one column of `rows` cells live.
    let mut prev = vec![Acc::INF; rows];
    let mut cur = vec![Acc::INF; rows];
    let mut end = Vec::with_capacity(cols);
    for j in 0..cols {
        for i in 0..rows {
            let best = if i == 0 && j == 0 {
                Acc { cost: 0.0, len: 0 }
            } else {
                let mut b = Acc::INF;
                if j > 0 {
                    b = b.better(prev[i]);
                    if i > 0 {
                        b = b.better(prev[i - 1]);
                    }
                }
                if i > 0 {
                    b = b.better(cur[i - 1]);
                }
                b
            };
            cur[i] = Acc {
                cost: best.cost + cost(i, j),
                len: best.len.saturating_add(1),
            };
        }
        end.push(cur[rows - 1]);
        std::mem::swap(&mut prev, &mut cur);
    }
    end
}
