use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::generators::{default_degree, GeneratorBasis};
use super::LatticeModel;
use crate::circuit::{Circuit, FermionGate};
use crate::error::{Error, Result};
use crate::fermion::ModeOrder;
use crate::linalg;

/// Coarse-graining block, `width × height` sites.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockShape {
    pub width: usize,
    pub height: usize,
}

impl BlockShape {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidLattice(format!(
                "block {width}x{height} is empty"
            )));
        }
        Ok(Self { width, height })
    }

    pub fn sites(&self) -> usize {
        self.width * self.height
    }
}

impl fmt::Display for BlockShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

impl FromStr for BlockShape {
    type Err = Error;

    /// Parses `WxH`, e.g. `3x3`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidLattice(format!("expected WxH, got {s:?}"));
        let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let w = w.trim().parse().map_err(|_| bad())?;
        let h = h.trim().parse().map_err(|_| bad())?;
        Self::new(w, h)
    }
}

/// Parity sector of the top reference state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateRole {
    Disentangler,
    Block,
}

/// A gate slot of the ansatz; its index is the gate index in the circuit.
#[derive(Clone, Debug)]
pub struct GateSpec {
    pub layer: usize,
    pub role: GateRole,
    pub support: ModeOrder,
    pub basis: GeneratorBasis,
}

/// One coarse-graining step, finest first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeraLayer {
    pub grid_width: usize,
    pub grid_height: usize,
    /// Block after clipping to the grid.
    pub block: BlockShape,
    /// Active modes, row-major over the grid.
    pub modes: Vec<usize>,
    pub disentanglers: Vec<Vec<usize>>,
    pub blocks: Vec<Vec<usize>>,
    /// Top-left mode of each block; these stay active.
    pub survivors: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeraOptions {
    /// Generator degree for every gate; `None` picks per support size.
    pub max_degree: Option<usize>,
    /// Standard deviation of the initial generator coefficients.
    pub init_std: f64,
}

impl Default for MeraOptions {
    fn default() -> Self {
        Self {
            max_degree: None,
            init_std: 0.01,
        }
    }
}

/// Layered disentangler/block circuit on a lattice.
#[derive(Clone, Debug)]
pub struct MeraAnsatz {
    pub width: usize,
    pub height: usize,
    pub block: BlockShape,
    pub layers: Vec<MeraLayer>,
    /// In circuit order.
    pub gates: Vec<GateSpec>,
    /// The mode left after the last layer.
    pub top_mode: usize,
    /// Initial generator coefficients, gate after gate.
    pub parameters: Vec<f64>,
}

impl MeraAnsatz {
    /// Occupied reference modes for a parity sector.
    pub fn reference(&self, parity: Parity) -> Vec<usize> {
        match parity {
            Parity::Even => Vec::new(),
            Parity::Odd => vec![self.top_mode],
        }
    }

    pub fn n_parameters(&self) -> usize {
        self.gates.iter().map(|g| g.basis.len()).sum()
    }
}

fn plan_layers(width: usize, height: usize, block: BlockShape) -> Result<Vec<MeraLayer>> {
    let mut modes: Vec<usize> = (1..=width * height).collect();
    let (mut gw, mut gh) = (width, height);
    let mut layers = Vec::new();
    while gw * gh > 1 {
        let clipped = BlockShape::new(block.width.min(gw), block.height.min(gh))?;
        let (bw, bh) = (clipped.width, clipped.height);
        if bw * bh == 1 {
            return Err(Error::InvalidLattice(format!(
                "block {block} cannot coarse-grain a {gw}x{gh} grid"
            )));
        }
        if gw % bw != 0 || gh % bh != 0 {
            return Err(Error::InvalidLattice(format!(
                "{gw}x{gh} grid is not divisible by block {bw}x{bh}"
            )));
        }
        let at = |x: usize, y: usize| modes[y * gw + x];
        let (nbx, nby) = (gw / bw, gh / bh);
        let mut blocks = Vec::new();
        let mut survivors = Vec::new();
        for by in 0..nby {
            for bx in 0..nbx {
                let mut b = Vec::with_capacity(bw * bh);
                for dy in 0..bh {
                    for dx in 0..bw {
                        b.push(at(bx * bw + dx, by * bh + dy));
                    }
                }
                survivors.push(b[0]);
                blocks.push(b);
            }
        }
        let mut disentanglers = Vec::new();
        if nbx > 1 && nby > 1 {
            for by in 1..nby {
                for bx in 1..nbx {
                    let (x, y) = (bx * bw, by * bh);
                    disentanglers.push(vec![
                        at(x - 1, y - 1),
                        at(x, y - 1),
                        at(x - 1, y),
                        at(x, y),
                    ]);
                }
            }
        } else if nbx > 1 {
            for y in 0..gh {
                for bx in 1..nbx {
                    disentanglers.push(vec![at(bx * bw - 1, y), at(bx * bw, y)]);
                }
            }
        } else if nby > 1 {
            for x in 0..gw {
                for by in 1..nby {
                    disentanglers.push(vec![at(x, by * bh - 1), at(x, by * bh)]);
                }
            }
        }
        layers.push(MeraLayer {
            grid_width: gw,
            grid_height: gh,
            block: clipped,
            modes: modes.clone(),
            disentanglers,
            blocks,
            survivors: survivors.clone(),
        });
        modes = survivors;
        gw = nbx;
        gh = nby;
    }
    Ok(layers)
}

/// Builds the ansatz and its circuit on the vacuum reference.
pub fn build_mera(m: &LatticeModel, block: BlockShape, seed: u64) -> Result<(MeraAnsatz, Circuit)> {
    build_mera_with(m, block, seed, &MeraOptions::default())
}

/// Gates are listed in preparation order: the coarsest layer first, and
/// within a layer the block unitaries before the disentanglers. Each gate
/// starts at `exp(i Σ c_b B_b)` with `c_b ~ N(0, init_std²)`.
pub fn build_mera_with(
    m: &LatticeModel,
    block: BlockShape,
    seed: u64,
    options: &MeraOptions,
) -> Result<(MeraAnsatz, Circuit)> {
    if !(options.init_std.is_finite() && options.init_std >= 0.0) {
        return Err(Error::InvalidOptions(format!(
            "init_std {}",
            options.init_std
        )));
    }
    let layers = plan_layers(m.width, m.height, block)?;
    let top_mode = layers.last().map_or(1, |l| l.survivors[0]);
    let normal = Normal::new(0.0, options.init_std).expect("finite std");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut specs = Vec::new();
    for (li, layer) in layers.iter().enumerate().rev() {
        let slots = layer.blocks.iter().map(|b| (GateRole::Block, b)).chain(
            layer
                .disentanglers
                .iter()
                .map(|d| (GateRole::Disentangler, d)),
        );
        for (role, modes) in slots {
            let support = ModeOrder::ascending(modes.iter().copied());
            let degree = options
                .max_degree
                .unwrap_or_else(|| default_degree(support.len()));
            let basis = GeneratorBasis::new(&support, degree)?;
            specs.push(GateSpec {
                layer: li,
                role,
                support,
                basis,
            });
        }
    }

    let mut parameters = Vec::new();
    let mut gates = Vec::with_capacity(specs.len());
    for (t, spec) in specs.iter().enumerate() {
        let coeffs: Vec<f64> = (0..spec.basis.len())
            .map(|_| normal.sample(&mut rng))
            .collect();
        let generator = spec.basis.combine(&coeffs);
        let mut u = linalg::exp_i_even(&generator).into_matrix();
        linalg::reunitarize(&mut u, 1e-14);
        let u = crate::fermion::OrderedOperator::new(spec.support.clone(), u)?;
        gates.push(FermionGate::from_unitary(u, t as u64 + 1)?);
        parameters.extend(coeffs);
    }
    let circuit = Circuit::vacuum(m.n_modes(), gates)?;
    let ansatz = MeraAnsatz {
        width: m.width,
        height: m.height,
        block,
        layers,
        gates: specs,
        top_mode,
        parameters,
    };
    Ok((ansatz, circuit))
}

/// Identity gates on the ansatz supports.
pub fn identity_circuit(ansatz: &MeraAnsatz, occupied: &[usize]) -> Result<Circuit> {
    let gates = ansatz
        .gates
        .iter()
        .enumerate()
        .map(|(t, g)| {
            let dim = g.support.dim();
            let u = crate::fermion::OrderedOperator::new(
                g.support.clone(),
                DMatrix::<Complex64>::identity(dim, dim),
            )?;
            FermionGate::from_unitary(u, t as u64 + 1)
        })
        .collect::<Result<Vec<_>>>()?;
    Circuit::new(ansatz.width * ansatz.height, gates, occupied)
}
