//! Patch-based dictionary built from a set of nonnegative atoms.
//!
//! The image is tiled by overlapping `pr x pc` windows placed every `stride`
//! pixels. Each window is synthesized from its own weights over the shared
//! atoms; overlapping windows are summed and divided by the per-pixel overlap
//! count so that a constant field synthesizes a flat image. The adjoint
//! divides by the same count, extracts each window and correlates it with
//! every atom.

use rand::Rng;

use crate::array::{dot, CoeffLayout, CoeffStack, Image};
use crate::error::{Error, Result};

/// Atom set as stored on disk: `num_atoms` row-major `patch_rows x patch_cols` patches.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchAtoms {
    patch_rows: usize,
    patch_cols: usize,
    num_atoms: usize,
    stride: usize,
    atoms: Vec<f64>,
}

impl PatchAtoms {
    pub fn new(patch_rows: usize, patch_cols: usize, stride: usize, atoms: Vec<Vec<f64>>) -> Result<Self> {
        if patch_rows == 0 || patch_cols == 0 {
            return Err(Error::InvalidDictionary("patch size must be positive".into()));
        }
        if stride == 0 {
            return Err(Error::InvalidDictionary("stride must be positive".into()));
        }
        if atoms.is_empty() {
            return Err(Error::InvalidDictionary("no atoms".into()));
        }
        let len = patch_rows * patch_cols;
        let num_atoms = atoms.len();
        let mut flat = Vec::with_capacity(len * num_atoms);
        for (a, atom) in atoms.into_iter().enumerate() {
            if atom.len() != len {
                return Err(Error::InvalidDictionary(format!(
                    "atom {a} has {} values, expected {len}",
                    atom.len()
                )));
            }
            if let Some(v) = atom.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::InvalidDictionary(format!("atom {a} has negative value {v}")));
            }
            flat.extend(atom);
        }
        Ok(Self {
            patch_rows,
            patch_cols,
            num_atoms,
            stride,
            atoms: flat,
        })
    }

    /// Smooth positive atoms: anisotropic Gaussian bumps with random centres
    /// and widths, one flat atom first, each scaled to unit l2 norm.
    pub fn synthetic(patch_rows: usize, patch_cols: usize, num_atoms: usize, stride: usize, rng: &mut impl Rng) -> Result<Self> {
        let mut atoms = Vec::with_capacity(num_atoms);
        for a in 0..num_atoms {
            let atom: Vec<f64> = if a == 0 {
                vec![1.0; patch_rows * patch_cols]
            } else {
                let cr = rng.random::<f64>() * patch_rows as f64;
                let cc = rng.random::<f64>() * patch_cols as f64;
                let sr = 0.75 + rng.random::<f64>() * patch_rows as f64 / 3.0;
                let sc = 0.75 + rng.random::<f64>() * patch_cols as f64 / 3.0;
                let mut v = Vec::with_capacity(patch_rows * patch_cols);
                for r in 0..patch_rows {
                    for c in 0..patch_cols {
                        let dr = (r as f64 - cr) / sr;
                        let dc = (c as f64 - cc) / sc;
                        v.push((-(dr * dr + dc * dc) / 2.0).exp());
                    }
                }
                v
            };
            let norm = atom.iter().map(|v| v * v).sum::<f64>().sqrt();
            atoms.push(atom.into_iter().map(|v| v / norm).collect());
        }
        Self::new(patch_rows, patch_cols, stride, atoms)
    }

    pub fn patch_size(&self) -> (usize, usize) {
        (self.patch_rows, self.patch_cols)
    }

    pub fn num_atoms(&self) -> usize {
        self.num_atoms
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn atom(&self, a: usize) -> &[f64] {
        let len = self.patch_rows * self.patch_cols;
        &self.atoms[a * len..(a + 1) * len]
    }

    /// Atoms per patch pixel.
    pub fn overcompleteness(&self) -> f64 {
        self.num_atoms as f64 / (self.patch_rows * self.patch_cols) as f64
    }
}

/// A [`PatchAtoms`] set bound to a particular image size.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchDictionary {
    atoms: PatchAtoms,
    rows: usize,
    cols: usize,
    positions: Vec<(usize, usize)>,
    inv_overlap: Vec<f64>,
}

impl PatchDictionary {
    pub fn new(atoms: PatchAtoms, rows: usize, cols: usize) -> Result<Self> {
        let (pr, pc) = atoms.patch_size();
        let s = atoms.stride();
        if pr > rows || pc > cols || !(rows - pr).is_multiple_of(s) || !(cols - pc).is_multiple_of(s) {
            return Err(Error::InvalidDictionary(format!(
                "{pr}x{pc} patches with stride {s} do not tile a {rows}x{cols} image"
            )));
        }
        let mut positions = Vec::new();
        for r0 in (0..=rows - pr).step_by(s) {
            for c0 in (0..=cols - pc).step_by(s) {
                positions.push((r0, c0));
            }
        }
        let mut count = vec![0.0; rows * cols];
        for &(r0, c0) in &positions {
            for r in r0..r0 + pr {
                for v in &mut count[r * cols + c0..r * cols + c0 + pc] {
                    *v += 1.0;
                }
            }
        }
        let inv_overlap = count.into_iter().map(|v: f64| 1.0 / v).collect();
        Ok(Self {
            atoms,
            rows,
            cols,
            positions,
            inv_overlap,
        })
    }

    pub fn atoms(&self) -> &PatchAtoms {
        &self.atoms
    }

    pub fn image_shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn num_patches(&self) -> usize {
        self.positions.len()
    }

    pub fn layout(&self) -> CoeffLayout {
        CoeffLayout::Patches {
            patches: self.positions.len(),
            atoms: self.atoms.num_atoms(),
        }
    }

    pub fn synthesize(&self, c: &CoeffStack) -> Result<Image> {
        if c.layout() != self.layout() {
            return Err(Error::LayoutMismatch {
                expected: self.layout(),
                found: c.layout(),
            });
        }
        let (pr, pc) = self.atoms.patch_size();
        let na = self.atoms.num_atoms();
        let coeffs = c.as_slice();
        let mut out = vec![0.0; self.rows * self.cols];
        let mut patch = vec![0.0; pr * pc];
        for (p, &(r0, c0)) in self.positions.iter().enumerate() {
            patch.iter_mut().for_each(|v| *v = 0.0);
            for (a, &w) in coeffs[p * na..(p + 1) * na].iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                for (d, s) in patch.iter_mut().zip(self.atoms.atom(a)) {
                    *d += w * s;
                }
            }
            for r in 0..pr {
                let dst = &mut out[(r0 + r) * self.cols + c0..(r0 + r) * self.cols + c0 + pc];
                for (d, s) in dst.iter_mut().zip(&patch[r * pc..(r + 1) * pc]) {
                    *d += s;
                }
            }
        }
        for (o, w) in out.iter_mut().zip(&self.inv_overlap) {
            *o *= w;
        }
        Ok(Image::from_vec_unchecked(self.rows, self.cols, out))
    }

    pub fn adjoint(&self, f: &Image) -> Result<CoeffStack> {
        if f.shape() != (self.rows, self.cols) {
            return Err(Error::ShapeMismatch {
                left: format!("{:?}", (self.rows, self.cols)),
                right: format!("{:?}", f.shape()),
            });
        }
        let (pr, pc) = self.atoms.patch_size();
        let na = self.atoms.num_atoms();
        let weighted: Vec<f64> = f.as_slice().iter().zip(&self.inv_overlap).map(|(a, b)| a * b).collect();
        let mut out = Vec::with_capacity(self.layout().len());
        let mut patch = vec![0.0; pr * pc];
        for &(r0, c0) in &self.positions {
            for r in 0..pr {
                let src = &weighted[(r0 + r) * self.cols + c0..(r0 + r) * self.cols + c0 + pc];
                patch[r * pc..(r + 1) * pc].copy_from_slice(src);
            }
            out.extend((0..na).map(|a| dot(self.atoms.atom(a), &patch)));
        }
        Ok(CoeffStack::from_vec_unchecked(self.layout(), out))
    }
}
