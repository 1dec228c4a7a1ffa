use super::GridError;

/// Neighbour offsets `(row, col)` in canonical action order.
pub const OFFSETS: [(i64, i64); 9] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 0),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Number of free action entries on an `n × n` grid: corners reach 4 cells,
/// non-corner edge cells 6 and interior cells 9 (self included).
pub fn n_actions(n: usize) -> Result<usize, GridError> {
    if n < 2 {
        return Err(GridError::GridTooSmall(n));
    }
    Ok(4 * 4 + 6 * 4 * (n - 2) + 9 * (n - 2) * (n - 2))
}

/// `(source, destination)` cell pairs in canonical action order: sources
/// row-major, then [`OFFSETS`] order, off-grid offsets skipped.
pub fn action_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for r in 0..n as i64 {
        for c in 0..n as i64 {
            for (dr, dc) in OFFSETS {
                let (rr, cc) = (r + dr, c + dc);
                if (0..n as i64).contains(&rr) && (0..n as i64).contains(&cc) {
                    pairs.push(((r * n as i64 + c) as usize, (rr * n as i64 + cc) as usize));
                }
            }
        }
    }
    pairs
}

/// Column-stochastic `n² × n²` matrix: entry `(i, j)` is the share of cell
/// `j`'s mass that moves to cell `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    cells: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    pub fn identity(cells: usize) -> Self {
        let mut data = vec![0.0; cells * cells];
        for i in 0..cells {
            data[i * cells + i] = 1.0;
        }
        Self { cells, data }
    }

    pub fn dim(&self) -> usize {
        self.cells
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cells + col]
    }

    pub fn column_sum(&self, col: usize) -> f64 {
        (0..self.cells).map(|r| self.get(r, col)).sum()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.cells)
            .map(|r| (0..self.cells).map(|c| self.get(r, c) * x[c]).sum())
            .collect()
    }
}

/// Places raw action entries into the neighbour pattern and normalizes each
/// column by its sum; an all-zero column becomes a self-transition.
pub fn build_transition(action: &[f64], n: usize) -> Result<TransitionMatrix, GridError> {
    let expected = n_actions(n)?;
    if action.len() != expected {
        return Err(GridError::ActionShape { expected, got: action.len() });
    }
    if let Some(i) = action.iter().position(|a| !(*a >= 0.0 && a.is_finite())) {
        return Err(GridError::NegativeAction { index: i, value: action[i] });
    }
    let cells = n * n;
    let mut data = vec![0.0; cells * cells];
    for (&(src, dst), &a) in action_pairs(n).iter().zip(action) {
        data[dst * cells + src] = a;
    }
    for col in 0..cells {
        let sum: f64 = (0..cells).map(|r| data[r * cells + col]).sum();
        if sum > 0.0 {
            for r in 0..cells {
                data[r * cells + col] /= sum;
            }
        } else {
            data[col * cells + col] = 1.0;
        }
    }
    Ok(TransitionMatrix { cells, data })
}
