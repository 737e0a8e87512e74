use rand::Rng;

use crate::knn::bits_for_cells;

use super::SimError;

/// A rectangular city split into square cells, numbered row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridCity {
    pub rows: usize,
    pub cols: usize,
    /// Side length in meters; informational only.
    pub cell_side_m: u32,
}

impl GridCity {
    pub fn new(rows: usize, cols: usize) -> Result<Self, SimError> {
        if rows * cols < 4 {
            return Err(SimError::Config(format!("{rows}x{cols} city has fewer than 4 cells")));
        }
        Ok(Self { rows, cols, cell_side_m: 400 })
    }

    pub fn cell_count(&self) -> usize {
        self.rows * self.cols
    }

    /// Bits needed for a cell identifier.
    pub fn id_bits(&self) -> usize {
        bits_for_cells(self.cell_count())
    }

    pub fn diameter(&self) -> usize {
        self.rows + self.cols - 2
    }

    pub fn cell(&self, row: usize, col: usize) -> u32 {
        (row * self.cols + col) as u32
    }

    pub fn coords(&self, cell: u32) -> (usize, usize) {
        (cell as usize / self.cols, cell as usize % self.cols)
    }

    pub fn contains(&self, cell: u32) -> bool {
        (cell as usize) < self.cell_count()
    }

    pub fn distance(&self, a: u32, b: u32) -> usize {
        let (ar, ac) = self.coords(a);
        let (br, bc) = self.coords(b);
        ar.abs_diff(br) + ac.abs_diff(bc)
    }

    /// Cells within Manhattan distance `radius` of `center`, in id order.
    pub fn area(&self, center: u32, radius: usize) -> Vec<u32> {
        let (r0, c0) = self.coords(center);
        let mut out = Vec::new();
        for r in r0.saturating_sub(radius)..=(r0 + radius).min(self.rows - 1) {
            for c in c0.saturating_sub(radius)..=(c0 + radius).min(self.cols - 1) {
                if r.abs_diff(r0) + c.abs_diff(c0) <= radius {
                    out.push(self.cell(r, c));
                }
            }
        }
        out
    }

    /// A shortest 4-connected walk from `a` to `b` with row and column
    /// steps interleaved at random. Such walks never revisit a cell.
    pub fn monotone_path<R: Rng + ?Sized>(&self, a: u32, b: u32, rng: &mut R) -> Vec<u32> {
        let (mut r, mut c) = self.coords(a);
        let (br, bc) = self.coords(b);
        let mut path = vec![a];
        while (r, c) != (br, bc) {
            let row_left = r.abs_diff(br);
            let col_left = c.abs_diff(bc);
            if rng.random_range(0..row_left + col_left) < row_left {
                r = if br > r { r + 1 } else { r - 1 };
            } else {
                c = if bc > c { c + 1 } else { c - 1 };
            }
            path.push(self.cell(r, c));
        }
        path
    }

    /// Whether consecutive cells of `path` are 4-neighbours and none repeats.
    pub fn is_simple_path(&self, path: &[u32]) -> bool {
        let connected = path.windows(2).all(|w| self.distance(w[0], w[1]) == 1);
        let mut sorted = path.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        connected && sorted.len() == path.len() && path.iter().all(|&c| self.contains(c))
    }
}

/// Analytic size of one offer in a scheme that encodes every city cell in
/// each of its four vectors: 4 vectors of `cell_count` entries, 8 parts, 8-byte floats.
pub fn ccrs_size_model(cell_count: usize) -> usize {
    4 * cell_count * 8 * 8
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn geometry() {
        let city = GridCity::new(40, 40).unwrap();
        assert_eq!(city.cell_count(), 1600);
        assert_eq!(city.id_bits(), 11);
        assert_eq!(city.coords(city.cell(3, 7)), (3, 7));
        assert_eq!(city.area(city.cell(10, 10), 2).len(), 13);
        assert_eq!(city.area(0, 2).len(), 6);
        assert!(GridCity::new(1, 3).is_err());
    }

    #[test]
    fn monotone_paths_are_shortest_and_simple() {
        let city = GridCity::new(20, 30).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..50 {
            let a = rng.random_range(0..600);
            let b = rng.random_range(0..600);
            let p = city.monotone_path(a, b, &mut rng);
            assert_eq!(p.len(), city.distance(a, b) + 1);
            assert!(city.is_simple_path(&p));
            assert_eq!((p[0], *p.last().unwrap()), (a, b));
        }
    }

    #[test]
    fn ccrs_model_is_linear() {
        assert_eq!(ccrs_size_model(1), 256);
        assert_eq!(ccrs_size_model(800), 2 * ccrs_size_model(400));
    }
}
