//! Generalization diagnostics: the directional derivative of the hidden-layer
//! map, the computable test-error upper bound, and the normalized indicator
//! used to rank trained models.

use crate::error::{Error, Result};
use crate::linalg::{bilinear_form, dot, norm2, Matrix};
use crate::model::{hidden_matrix, HiddenNode, InputShape, Network};

/// An input perturbation `X -> X + eta * Z`, with `Z` one flattened
/// (column-major) direction row per sample.
#[derive(Debug, Clone)]
pub struct PerturbationSpec {
    pub eta: f64,
    pub z: Matrix,
}

impl PerturbationSpec {
    pub fn new(eta: f64, z: Matrix) -> Result<Self> {
        if eta.is_nan() || eta < 0.0 || !eta.is_finite() {
            return Err(Error::Config(format!("eta must be finite and >= 0, got {eta}")));
        }
        Ok(Self { eta, z })
    }
}

fn check_direction(net: &Network, n: usize, z: &Matrix) -> Result<()> {
    if z.rows() != n || z.cols() != net.input_shape().total() {
        return Err(Error::Shape(format!(
            "direction is {}x{}, expected {}x{}",
            z.rows(),
            z.cols(),
            n,
            net.input_shape().total()
        )));
    }
    Ok(())
}

/// Reshape one flattened direction row back to the network's sample shape.
fn reshape_row(shape: InputShape, row: &[f64]) -> Result<Matrix> {
    match shape {
        InputShape::OneD(d) => Matrix::from_col_major(d, 1, row),
        InputShape::TwoD(d1, d2) => Matrix::from_col_major(d1, d2, row),
    }
}

/// Samples shifted by `eta` times the per-row direction.
pub fn perturb_inputs(
    net: &Network,
    inputs: &[Matrix],
    z: &Matrix,
    eta: f64,
) -> Result<Vec<Matrix>> {
    check_direction(net, inputs.len(), z)?;
    inputs
        .iter()
        .enumerate()
        .map(|(i, x)| x.add(&reshape_row(net.input_shape(), z.row(i))?.scale(eta)?))
        .collect()
}

/// Flat-weight dot product `w_j^T z_i` without materializing `vec(u v^T)`.
fn weight_dot(node: &HiddenNode, shape: InputShape, row: &[f64]) -> Result<f64> {
    match node {
        HiddenNode::OneD { w, .. } => Ok(dot(w, row)),
        HiddenNode::TwoD { u, v, .. } => {
            let z = reshape_row(shape, row)?;
            bilinear_form(u, &z, v)
        }
    }
}

/// First directional derivative of the hidden-layer map in direction `Z`:
/// entry `(i, j) = g_ij (1 - g_ij) * (w_j^T z_i)` with `g_ij` the node output.
pub fn directional_derivative(net: &Network, inputs: &[Matrix], z: &Matrix) -> Result<Matrix> {
    check_direction(net, inputs.len(), z)?;
    let l = net.nodes().len();
    let mut data = vec![0.0; inputs.len() * l];
    for (i, x) in inputs.iter().enumerate() {
        for (j, node) in net.nodes().iter().enumerate() {
            let g = node.output(x)?;
            data[i * l + j] = g * (1.0 - g) * weight_dot(node, net.input_shape(), z.row(i))?;
        }
    }
    Matrix::new(inputs.len(), l, data)
}

/// `H o (O - H) o W..`: entry `(i, j) = g_ij (1 - g_ij) * ||w_j||_2`, the
/// saturation-weighted sensitivity matrix.
pub fn saturation_matrix(net: &Network, inputs: &[Matrix]) -> Result<Matrix> {
    let norms: Vec<f64> = net.nodes().iter().map(HiddenNode::weight_norm).collect();
    let h = hidden_matrix(net.nodes(), inputs)?;
    Matrix::from_fn(h.rows(), h.cols(), |i, j| {
        let g = h.get(i, j);
        g * (1.0 - g) * norms[j]
    })
}

/// Raw generalization indicator `||H o (O - H) o W..||_F * ||beta||_F`.
pub fn indicator_theta_raw(net: &Network, inputs: &[Matrix]) -> Result<f64> {
    Ok(saturation_matrix(net, inputs)?.frobenius_norm() * net.beta().frobenius_norm())
}

/// Normalize raw indicators by their maximum; the largest maps to exactly 1.
pub fn normalize_indicators(raws: &[f64]) -> Result<Vec<f64>> {
    let max = raws.iter().cloned().fold(0.0, f64::max);
    if max.is_nan() || max <= 0.0 {
        return Err(Error::DegenerateNormalization(
            "all indicators are zero".into(),
        ));
    }
    Ok(raws.iter().map(|&r| r / max).collect())
}

/// Largest per-sample direction norm `max_i ||Z_i||_2`.
pub fn max_row_norm(z: &Matrix) -> f64 {
    (0..z.rows()).map(|i| norm2(z.row(i))).fold(0.0, f64::max)
}

/// Computable test-error upper bound:
/// training error plus `eta * max_i ||Z_i||_2 * ||H o (O-H) o W..||_F * ||beta||_F`.
/// Set `include_direction_scale = false` to drop the `max_i ||Z_i||_2` factor.
pub fn test_error_bound(
    net: &Network,
    inputs: &[Matrix],
    targets: &Matrix,
    spec: &PerturbationSpec,
    include_direction_scale: bool,
) -> Result<f64> {
    check_direction(net, inputs.len(), &spec.z)?;
    let train_err = net
        .predict(inputs)?
        .sub(targets)?
        .frobenius_norm();
    let sat = saturation_matrix(net, inputs)?.frobenius_norm();
    let scale = if include_direction_scale {
        max_row_norm(&spec.z)
    } else {
        1.0
    };
    Ok(train_err + spec.eta * scale * sat * net.beta().frobenius_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Builder, Provenance};
    use crate::rng::child_rng;
    use rand::Rng;

    fn provenance() -> Provenance {
        Provenance {
            builder: Builder::TwoDScn,
            seed: 0,
            config_digest: "0".into(),
        }
    }

    fn random_net(rng: &mut impl Rng, l: usize, d1: usize, d2: usize, m: usize) -> Network {
        let nodes = (0..l)
            .map(|_| HiddenNode::TwoD {
                u: (0..d1).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                v: (0..d2).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                b: rng.gen_range(-1.0..1.0),
            })
            .collect();
        let beta =
            Matrix::new(l, m, (0..l * m).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        Network::new(InputShape::TwoD(d1, d2), nodes, beta, provenance()).unwrap()
    }

    fn random_samples(rng: &mut impl Rng, n: usize, d1: usize, d2: usize) -> Vec<Matrix> {
        (0..n)
            .map(|_| {
                Matrix::new(d1, d2, (0..d1 * d2).map(|_| rng.gen_range(-1.0..1.0)).collect())
                    .unwrap()
            })
            .collect()
    }

    fn random_direction(rng: &mut impl Rng, n: usize, d: usize) -> Matrix {
        Matrix::new(n, d, (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn zero_direction_gives_zero_derivative() {
        let mut rng = child_rng(31, &[0]);
        let net = random_net(&mut rng, 3, 2, 2, 1);
        let xs = random_samples(&mut rng, 4, 2, 2);
        let dh = directional_derivative(&net, &xs, &Matrix::zeros(4, 4)).unwrap();
        assert!(dh.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn unit_direction_picks_one_weight() {
        // single 1D node with w = e_1; direction rows = e_1
        let d = 4;
        let node = HiddenNode::OneD {
            w: {
                let mut w = vec![0.0; d];
                w[0] = 1.0;
                w
            },
            b: 0.3,
        };
        let net = Network::new(
            InputShape::OneD(d),
            vec![node.clone()],
            Matrix::new(1, 1, vec![1.0]).unwrap(),
            provenance(),
        )
        .unwrap();
        let mut rng = child_rng(32, &[0]);
        let xs: Vec<Matrix> = (0..3)
            .map(|_| {
                Matrix::column_vector(&(0..d).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>())
                    .unwrap()
            })
            .collect();
        let z = Matrix::from_fn(3, d, |_, j| if j == 0 { 1.0 } else { 0.0 }).unwrap();
        let dh = directional_derivative(&net, &xs, &z).unwrap();
        for (i, x) in xs.iter().enumerate() {
            let g = node.output(x).unwrap();
            assert!((dh.get(i, 0) - g * (1.0 - g)).abs() < 1e-15);
        }
    }

    #[test]
    fn finite_difference_ratio_shrinks_linearly() {
        let mut rng = child_rng(33, &[0]);
        let net = random_net(&mut rng, 4, 3, 3, 1);
        let xs = random_samples(&mut rng, 5, 3, 3);
        let z = random_direction(&mut rng, 5, 9);
        let dh = directional_derivative(&net, &xs, &z).unwrap();
        let h0 = hidden_matrix(net.nodes(), &xs).unwrap();
        let mut last_err = f64::MAX;
        for eta in [1e-3, 1e-4, 1e-5] {
            let hp = hidden_matrix(net.nodes(), &perturb_inputs(&net, &xs, &z, eta).unwrap())
                .unwrap();
            let fd = hp.sub(&h0).unwrap().scale(1.0 / eta).unwrap();
            let err = fd.sub(&dh).unwrap().frobenius_norm();
            // forward-difference error is O(eta)
            assert!(err < last_err);
            assert!(err < 10.0 * eta * dh.frobenius_norm().max(1.0), "eta {eta}: {err}");
            last_err = err;
        }
    }

    #[test]
    fn indicator_zero_weights() {
        let net = Network::new(
            InputShape::TwoD(2, 2),
            vec![HiddenNode::TwoD {
                u: vec![0.0; 2],
                v: vec![0.0; 2],
                b: 0.0,
            }],
            Matrix::new(1, 1, vec![5.0]).unwrap(),
            provenance(),
        )
        .unwrap();
        let mut rng = child_rng(34, &[0]);
        let xs = random_samples(&mut rng, 3, 2, 2);
        assert_eq!(indicator_theta_raw(&net, &xs).unwrap(), 0.0);
    }

    #[test]
    fn indicator_single_node_single_sample() {
        let mut rng = child_rng(35, &[0]);
        let net = random_net(&mut rng, 1, 2, 3, 1);
        let xs = random_samples(&mut rng, 1, 2, 3);
        let g = net.nodes()[0].output(&xs[0]).unwrap();
        let expected = (g * (1.0 - g)).abs() * net.nodes()[0].weight_norm()
            * net.beta().frobenius_norm();
        assert!((indicator_theta_raw(&net, &xs).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn saturation_reduces_node_contribution() {
        let mut rng = child_rng(36, &[0]);
        let xs = random_samples(&mut rng, 10, 3, 3);
        let mk = |scale: f64| {
            let mut rng = child_rng(36, &[1]);
            let u: Vec<f64> = (0..3).map(|_| rng.gen_range(0.5..1.0) * scale).collect();
            let v: Vec<f64> = (0..3).map(|_| rng.gen_range(0.5..1.0) * scale).collect();
            let b = rng.gen_range(0.5..1.0) * scale;
            Network::new(
                InputShape::TwoD(3, 3),
                vec![HiddenNode::TwoD { u, v, b }],
                Matrix::new(1, 1, vec![1.0]).unwrap(),
                provenance(),
            )
            .unwrap()
        };
        // driving the node deep into saturation shrinks g(1-g) faster than
        // ||w|| grows only if saturation dominates; check entrywise factor
        let mild = mk(1.0);
        let sharp = mk(10.0);
        let sat_mild = saturation_matrix(&mild, &xs).unwrap();
        let sat_sharp = saturation_matrix(&sharp, &xs).unwrap();
        // the g(1-g) factor itself must collapse under saturation
        let h_mild = hidden_matrix(mild.nodes(), &xs).unwrap();
        let h_sharp = hidden_matrix(sharp.nodes(), &xs).unwrap();
        for i in 0..10 {
            let gm = h_mild.get(i, 0);
            let gs = h_sharp.get(i, 0);
            assert!(gs * (1.0 - gs) < gm * (1.0 - gm));
        }
        assert!(sat_sharp.frobenius_norm() < sat_mild.frobenius_norm() * 100.0);
    }

    #[test]
    fn normalize_cases() {
        assert_eq!(normalize_indicators(&[2.0, 4.0]).unwrap(), vec![0.5, 1.0]);
        assert_eq!(normalize_indicators(&[3.0]).unwrap(), vec![1.0]);
        let out = normalize_indicators(&[1.0, 7.0, 3.0]).unwrap();
        assert_eq!(out[1], 1.0);
        assert!(normalize_indicators(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn bound_reduces_to_training_error() {
        let mut rng = child_rng(37, &[0]);
        let net = random_net(&mut rng, 3, 2, 2, 1);
        let xs = random_samples(&mut rng, 5, 2, 2);
        let t = Matrix::new(5, 1, (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let train_err = net.predict(&xs).unwrap().sub(&t).unwrap().frobenius_norm();
        let z = random_direction(&mut rng, 5, 4);
        let spec0 = PerturbationSpec::new(0.0, z).unwrap();
        assert!((test_error_bound(&net, &xs, &t, &spec0, true).unwrap() - train_err).abs() < 1e-15);
        let specz = PerturbationSpec::new(1e-2, Matrix::zeros(5, 4)).unwrap();
        assert!((test_error_bound(&net, &xs, &t, &specz, true).unwrap() - train_err).abs() < 1e-15);
    }

    #[test]
    fn bound_dominates_measured_perturbed_error() {
        let mut rng = child_rng(38, &[0]);
        for trial in 0..5 {
            let net = random_net(&mut rng, 4, 3, 3, 1);
            let xs = random_samples(&mut rng, 8, 3, 3);
            // realizable targets keep beta modest
            let t = net.predict(&xs).unwrap();
            let z = random_direction(&mut rng, 8, 9);
            for eta in [1e-2, 1e-3] {
                let spec = PerturbationSpec::new(eta, z.clone()).unwrap();
                let bound = test_error_bound(&net, &xs, &t, &spec, true).unwrap();
                let hp = hidden_matrix(
                    net.nodes(),
                    &perturb_inputs(&net, &xs, &z, eta).unwrap(),
                )
                .unwrap();
                let measured = hp.matmul(net.beta()).unwrap().sub(&t).unwrap().frobenius_norm();
                // second-order slack scales with eta^2
                assert!(
                    measured <= bound + 50.0 * eta * eta,
                    "trial {trial} eta {eta}: {measured} vs {bound}"
                );
            }
        }
    }

    #[test]
    fn cauchy_schwarz_chain_holds() {
        let mut rng = child_rng(39, &[0]);
        for _ in 0..20 {
            let net = random_net(&mut rng, 5, 3, 2, 2);
            let xs = random_samples(&mut rng, 6, 3, 2);
            let z = random_direction(&mut rng, 6, 6);
            let dh = directional_derivative(&net, &xs, &z).unwrap();
            let rhs = max_row_norm(&z) * saturation_matrix(&net, &xs).unwrap().frobenius_norm();
            assert!(dh.frobenius_norm() <= rhs + 1e-12);
        }
    }

    #[test]
    fn indicator_invariant_under_node_permutation() {
        let mut rng = child_rng(40, &[0]);
        let net = random_net(&mut rng, 5, 2, 2, 2);
        let xs = random_samples(&mut rng, 7, 2, 2);
        let raw = indicator_theta_raw(&net, &xs).unwrap();
        // reverse node order and permute beta rows the same way
        let nodes: Vec<HiddenNode> = net.nodes().iter().rev().cloned().collect();
        let beta = Matrix::from_fn(5, 2, |i, j| net.beta().get(4 - i, j)).unwrap();
        let permuted = Network::new(net.input_shape(), nodes, beta, provenance()).unwrap();
        let raw_p = indicator_theta_raw(&permuted, &xs).unwrap();
        assert!((raw - raw_p).abs() < 1e-12 * raw.max(1.0));
    }
}
