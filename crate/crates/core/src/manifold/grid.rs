//! Structured chart grids with periodic and pole-offset directions.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryRule {
    Periodic,
    /// Nodes at half-spacing offsets; the grid ends half a cell short of a
    /// coordinate singularity on both sides.
    PoleOffset,
}

/// How a ghost node beyond a pole maps back onto the grid.
///
/// The pole direction itself is mirrored, every direction in `reflect_mask`
/// other than the pole direction is mirrored as `i -> n-1-i`, and
/// `shift_dir` (periodic) is shifted by half its period. Tensor components
/// pick up a factor −1 per index along a direction in `reflect_mask`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GhostRule {
    pub reflect_mask: u8,
    pub shift_dir: usize,
}

/// A stencil neighbour: the grid node holding the value, the component
/// parity mask, and the (possibly ghost) chart coordinate.
#[derive(Clone, Copy, Debug)]
pub struct Neighbor {
    pub node: usize,
    pub flip: u8,
    pub coord: [f64; 3],
}

#[derive(Clone, Debug)]
pub struct ChartGrid {
    pub dim: usize,
    pub n: [usize; 3],
    pub h: [f64; 3],
    pub origin: [f64; 3],
    pub rules: [BoundaryRule; 3],
    pub ghosts: [Option<GhostRule>; 3],
}

impl ChartGrid {
    pub fn node_count(&self) -> usize {
        self.n[..self.dim].iter().product()
    }

    pub fn index(&self, multi: [usize; 3]) -> usize {
        let mut idx = 0;
        for d in 0..self.dim {
            idx = idx * self.n[d] + multi[d];
        }
        idx
    }

    pub fn multi(&self, node: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        let mut rest = node;
        for d in (0..self.dim).rev() {
            out[d] = rest % self.n[d];
            rest /= self.n[d];
        }
        out
    }

    fn offset(&self, d: usize) -> f64 {
        match self.rules[d] {
            BoundaryRule::Periodic => 0.0,
            BoundaryRule::PoleOffset => 0.5,
        }
    }

    /// Coordinate of a (possibly out-of-range) integer position; fractional
    /// positions are allowed for staggered points.
    pub fn coord_at(&self, pos: [f64; 3]) -> [f64; 3] {
        let mut x = [0.0; 3];
        for d in 0..self.dim {
            x[d] = self.origin[d] + (pos[d] + self.offset(d)) * self.h[d];
        }
        x
    }

    pub fn coord(&self, node: usize) -> [f64; 3] {
        let m = self.multi(node);
        self.coord_at([m[0] as f64, m[1] as f64, m[2] as f64])
    }

    /// Neighbour one step (`step = ±1`) along `dir`.
    pub fn neighbor(&self, node: usize, dir: usize, step: i64) -> Neighbor {
        let base = self.multi(node);
        let mut pos = [base[0] as f64, base[1] as f64, base[2] as f64];
        pos[dir] += step as f64;
        let coord = self.coord_at(pos);
        let n = self.n[dir] as i64;
        let j = base[dir] as i64 + step;
        let mut target = base;
        let mut flip = 0u8;
        match self.rules[dir] {
            BoundaryRule::Periodic => {
                target[dir] = j.rem_euclid(n) as usize;
            }
            BoundaryRule::PoleOffset => {
                if (0..n).contains(&j) {
                    target[dir] = j as usize;
                } else {
                    let rule = self.ghosts[dir].expect("pole direction without ghost rule");
                    target[dir] = if j < 0 { (-1 - j) as usize } else { (2 * n - 1 - j) as usize };
                    for e in 0..self.dim {
                        if e != dir && rule.reflect_mask & (1 << e) != 0 {
                            target[e] = self.n[e] - 1 - target[e];
                        }
                    }
                    let s = rule.shift_dir;
                    target[s] = (target[s] + self.n[s] / 2) % self.n[s];
                    flip = rule.reflect_mask;
                }
            }
        }
        Neighbor {
            node: self.index(target),
            flip,
            coord,
        }
    }

    /// Largest spacing, used as the grid scale h.
    pub fn h_max(&self) -> f64 {
        self.h[..self.dim].iter().cloned().fold(0.0, f64::max)
    }

    pub fn cell_volume(&self) -> f64 {
        self.h[..self.dim].iter().product()
    }
}

/// Sign picked up by a tensor component with the given index digits under
/// a parity mask.
pub fn parity(indices: &[usize], mask: u8) -> f64 {
    if mask == 0 {
        return 1.0;
    }
    let flips = indices.iter().filter(|&&i| mask & (1 << i) != 0).count();
    if flips % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sphere_grid(nt: usize, np: usize) -> ChartGrid {
        ChartGrid {
            dim: 2,
            n: [nt, np, 1],
            h: [PI / nt as f64, 2.0 * PI / np as f64, 1.0],
            origin: [0.0; 3],
            rules: [BoundaryRule::PoleOffset, BoundaryRule::Periodic, BoundaryRule::Periodic],
            ghosts: [
                Some(GhostRule {
                    reflect_mask: 1,
                    shift_dir: 1,
                }),
                None,
                None,
            ],
        }
    }

    #[test]
    fn pole_ghost_maps_across_with_half_turn() {
        let g = sphere_grid(8, 16);
        let node = g.index([0, 3, 0]);
        let nb = g.neighbor(node, 0, -1);
        assert_eq!(g.multi(nb.node), [0, 11, 0]);
        assert_eq!(nb.flip, 1);
        assert!((nb.coord[0] + PI / 16.0).abs() < 1e-15);
        let top = g.index([7, 12, 0]);
        let nb = g.neighbor(top, 0, 1);
        assert_eq!(g.multi(nb.node), [7, 4, 0]);
    }

    #[test]
    fn periodic_wrap_has_no_flip() {
        let g = sphere_grid(8, 16);
        let nb = g.neighbor(g.index([2, 15, 0]), 1, 1);
        assert_eq!(g.multi(nb.node), [2, 0, 0]);
        assert_eq!(nb.flip, 0);
        assert_eq!(parity(&[0, 1], 1), -1.0);
        assert_eq!(parity(&[0, 0], 1), 1.0);
    }
}
