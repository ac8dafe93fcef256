//! Spectral structure of Σ along u₀.

use critfield::covariance_core::{
    cond_len, conditional_covariance, find_rescaling, reference_direction, rescale,
    sigma_expansion, sym_index, vectorize_sym, ModelFamily, RadialModel,
};
use critfield::eigen_structure::{
    bv_determinant, classify_scaling, eigenpath, h_matrix, h_r_from, limit_polynomial,
    ordered_eigendecomposition, scaling_class, spectrum_sigma0, LimitPolynomial, ScalingClass,
    DEFAULT_R_GRID, SCALING_GRID,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sorted_desc(v: &DVector<f64>) -> Vec<f64> {
    let mut out: Vec<f64> = v.iter().copied().collect();
    out.sort_by(|a, b| b.partial_cmp(a).unwrap());
    out
}

#[test]
fn catalogue_for_unit_gaussian_in_four_dimensions() {
    let cat = spectrum_sigma0(&RadialModel::gaussian(4)).unwrap();
    assert!((cat.lambda_plus() - 16.694).abs() < 1e-3);
    assert!((cat.lambda_minus() - 0.639).abs() < 1e-3);
    let mult: Vec<usize> = cat.entries.iter().map(|e| e.multiplicity).collect();
    assert_eq!(mult, vec![1, 1, 3, 2, 5]);
    assert_eq!(mult.iter().sum::<usize>(), 12);
    let [[a, b], [c, d]] = cat.w;
    for (x, y) in [(a, 16.0), (b, -8.0 / 3.0), (c, -4.0), (d, 4.0 / 3.0)] {
        assert!((x - y).abs() < 1e-12, "{x} vs {y}");
    }
    assert!((cat.lambda_plus() * cat.lambda_minus() - (a * d - b * c)).abs() < 1e-12);
}

#[test]
fn catalogue_in_two_dimensions() {
    let cat = spectrum_sigma0(&RadialModel::gaussian(2)).unwrap();
    let mult: Vec<usize> = cat.entries.iter().map(|e| e.multiplicity).collect();
    assert_eq!(mult, vec![1, 1, 0, 0, 3]);
    assert_eq!(cat.l, 5);
}

#[test]
fn catalogue_matches_numeric_spectrum_after_rescaling() {
    for n in 2..=6 {
        for fam in [
            ModelFamily::Gaussian { a: 1.0 },
            ModelFamily::Cauchy { ell: 1.0, nu: 2.0 },
        ] {
            let base = RadialModel::from_family(fam, n).unwrap();
            let model = rescale(&base, find_rescaling(&base)).unwrap();
            let cat = spectrum_sigma0(&model).unwrap();
            let s0 = sigma_expansion(&model, &reference_direction(n))
                .unwrap()
                .sigma0;
            let numeric = sorted_desc(&s0.symmetric_eigenvalues());
            for (x, y) in numeric.iter().zip(cat.sorted_values()) {
                assert!((x - y).abs() < 1e-9, "N={n}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn ordered_decomposition_of_reference_matrix() {
    let model = RadialModel::gaussian(4);
    let s0 = sigma_expansion(&model, &reference_direction(4))
        .unwrap()
        .sigma0;
    let (lambda, p) = ordered_eigendecomposition(&s0).unwrap();
    let expected = [16.694, 8.0, 8.0, 4.0, 4.0, 4.0, 0.639];
    for (k, e) in expected.iter().enumerate() {
        assert!((lambda[k] - e).abs() < 1e-3, "{k}: {}", lambda[k]);
    }
    for k in 7..12 {
        assert!(lambda[k].abs() < 1e-12);
    }
    let back = &p * DMatrix::from_diagonal(&lambda) * p.transpose();
    assert!((back - &s0).norm() < 1e-10 * s0.norm());
    // Deterministic: the same input gives the same basis.
    let (_, p2) = ordered_eigendecomposition(&s0).unwrap();
    assert_eq!(p, p2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn ordered_decomposition_reconstructs(entries in proptest::collection::vec(-1.0f64..1.0, 36)) {
        let g = DMatrix::from_row_slice(6, 6, &entries);
        let s = &g * g.transpose();
        let (lambda, p) = ordered_eigendecomposition(&s).unwrap();
        for k in 1..6 {
            prop_assert!(lambda[k - 1] >= lambda[k]);
        }
        let back = &p * DMatrix::from_diagonal(&lambda) * p.transpose();
        prop_assert!((back - &s).norm() <= 1e-10 * s.norm().max(1e-300));
        prop_assert!((p.transpose() * &p - DMatrix::<f64>::identity(6, 6)).amax() < 1e-10);
    }
}

#[test]
fn nonzero_eigenvectors_have_the_prescribed_shape() {
    for n in 2..=5 {
        let model = RadialModel::gaussian(n);
        let s0 = sigma_expansion(&model, &reference_direction(n))
            .unwrap()
            .sigma0;
        let (lambda, p) = ordered_eigendecomposition(&s0).unwrap();
        let l = cond_len(n);
        let cat = spectrum_sigma0(&model).unwrap();
        for k in 0..l - n - 1 {
            let col = p.column(k);
            assert!((col[l - 2] - col[l - 1]).abs() < 1e-9);
            for i in 0..n {
                assert!(col[sym_index(i, n - 1)].abs() < 1e-9);
            }
            // λ_l and λ_s: diagonal entries equal x, corner entries equal y.
            for target in [cat.lambda_plus(), cat.lambda_minus()] {
                if (lambda[k] - target).abs() < 1e-9 {
                    let x = col[0];
                    let y = col[l - 1];
                    assert!(x.abs() > 1e-6 && y.abs() > 1e-6);
                    for i in 0..n - 1 {
                        assert!((col[sym_index(i, i)] - x).abs() < 1e-9);
                        for j in i + 1..n - 1 {
                            assert!(col[sym_index(i, j)].abs() < 1e-9);
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn expansion_orders_along_reference_direction() {
    for n in 2..=3 {
        let model = RadialModel::gaussian(n);
        let u = reference_direction(n);
        let exp = eigenpath(&model, &u, &DEFAULT_R_GRID).unwrap();
        let l = exp.l;
        assert!(exp.lambda1.amax() < 1e-6, "Λ₁ = {}", exp.lambda1);
        for i in l - n - 1..l - 1 {
            assert!(exp.lambda2[i] > 0.0, "λ_{},2 = {}", i + 1, exp.lambda2[i]);
        }
        assert!(
            exp.lambda2[l - 1].abs() < 1e-8,
            "λ_L,2 = {}",
            exp.lambda2[l - 1]
        );
        // P₀^{(L)} ∝ (0, …, 0, 1, −1)
        let mut j = DVector::zeros(l);
        j[l - 2] = 1.0 / 2f64.sqrt();
        j[l - 1] = -1.0 / 2f64.sqrt();
        let col = exp.p0.column(l - 1).into_owned();
        let residual = (&col - &j * j.dot(&col)).norm();
        assert!(residual < 1e-6, "{residual}");
        // Λ₀ agrees with the catalogue; P₀ is orthonormal; diag(P₀ᵀP₁) = 0.
        let cat = spectrum_sigma0(&model).unwrap().sorted_values();
        for (a, b) in exp.lambda0.iter().zip(&cat) {
            assert!((a - b).abs() < 1e-6);
        }
        let ortho = exp.p0.transpose() * &exp.p0 - DMatrix::<f64>::identity(l, l);
        assert!(ortho.amax() < 1e-10);
        let cross = exp.p0.transpose() * &exp.p1;
        assert!(cross.diagonal().amax() < 1e-10);
    }
}

#[test]
fn null_space_lambda2_matches_rayleigh_quotients() {
    for n in 2..=4 {
        let model = RadialModel::gaussian(n);
        let exp = eigenpath(&model, &reference_direction(n), &DEFAULT_R_GRID).unwrap();
        for i in exp.rank0..exp.l {
            let p = exp.p0.column(i);
            let q = p.dot(&(&exp.sigma.sigma2 * p));
            assert!(
                (q - exp.lambda2[i]).abs() < 1e-6,
                "i={i}: {q} vs {}",
                exp.lambda2[i]
            );
        }
        // P₁ satisfies Σ₀P₁^{(i)} = λ_{i,0}P₁^{(i)} after gauge fixing.
        for i in 0..exp.l {
            let p1 = exp.p1.column(i);
            let lhs = &exp.sigma.sigma0 * p1;
            assert!((lhs - p1 * exp.lambda0[i]).amax() < 1e-8);
        }
    }
}

#[test]
fn determinant_vanishes_faster_than_r_to_2n_plus_2() {
    for n in 2..=3 {
        let model = RadialModel::gaussian(n);
        let u = reference_direction(n);
        let det = |r: f64| {
            conditional_covariance(&model, r, &u)
                .unwrap()
                .sigma
                .determinant()
        };
        let slope = (det(1e-2).abs().ln() - det(1e-1).abs().ln()) / (1e-2f64.ln() - 1e-1f64.ln());
        assert!(slope > (2 * n + 2) as f64, "N={n}: slope {slope}");
    }
}

#[test]
fn h_matrix_layout_and_identities() {
    let u = [0.2, -0.4, 0.5];
    let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let u: Vec<f64> = u.iter().map(|x| x / norm).collect();
    let h = h_matrix(&u);
    // Printed layout for N = 3, row 1: (u1, u2, 0, u3, 0, 0, 0, 0).
    let row0: Vec<f64> = h.row(0).iter().copied().collect();
    assert_eq!(row0, vec![u[0], u[1], 0.0, u[2], 0.0, 0.0, 0.0, 0.0]);
    let row1: Vec<f64> = h.row(1).iter().copied().collect();
    assert_eq!(row1, vec![0.0, u[0], u[1], 0.0, u[2], 0.0, 0.0, 0.0]);
    let row2: Vec<f64> = h.row(2).iter().copied().collect();
    assert_eq!(row2, vec![0.0, 0.0, 0.0, u[0], u[1], u[2], 0.0, 0.0]);

    let mut id = vectorize_sym(&DMatrix::identity(3, 3)).unwrap();
    id.extend([0.0, 0.0]);
    let hu = &h * DVector::from_column_slice(&id);
    for k in 0..3 {
        assert!((hu[k] - u[k]).abs() < 1e-15);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
    let lhs = &h * DVector::from_column_slice(&a);
    let m = critfield::covariance_core::matriculate(&a, 3).unwrap();
    let rhs = m * DVector::from_column_slice(&u);
    assert!((lhs - rhs).amax() < 1e-14);
}

#[test]
fn h_matrix_annihilates_sigma0() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in 2..=4 {
        let model = RadialModel::gaussian(n);
        for _ in 0..3 {
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let u: Vec<f64> = v.iter().map(|x| x / norm).collect();
            let s0 = sigma_expansion(&model, &u).unwrap().sigma0;
            assert!((&s0 * h_matrix(&u).transpose()).amax() < 1e-12);
        }
    }
    // For u₀ row i is the indicator of τ(i, N).
    let h = h_matrix(&reference_direction(4));
    for row in 0..4 {
        for col in 0..cond_len(4) {
            let expected = if col == sym_index(row, 3) { 1.0 } else { 0.0 };
            assert_eq!(h[(row, col)], expected, "({row}, {col})");
        }
    }
}

#[test]
fn rank_columns_of_the_factor_are_little_o_under_h() {
    let n = 3;
    let model = RadialModel::gaussian(n);
    let u = reference_direction(n);
    let exp = eigenpath(&model, &u, &DEFAULT_R_GRID).unwrap();
    let r = 1e-3;
    let a = exp.point(r).unwrap().factor();
    let h = h_matrix(&u);
    for i in 0..exp.rank0 {
        let norm = (&h * a.column(i)).norm();
        assert!(norm < r.powf(1.5), "column {i}: {norm}");
    }
}

#[test]
fn scaling_classes_for_two_dimensions() {
    let n = 2;
    let model = RadialModel::gaussian(n);
    let u = reference_direction(n);
    let exp = eigenpath(&model, &u, &SCALING_GRID).unwrap();
    let l = exp.l; // 5; null columns 2, 3, 4 (0-based)
    assert_eq!(exp.rank0, 2);
    // two null columns
    for v in [[2usize, 3], [3, 4], [2, 4]] {
        assert_eq!(
            classify_scaling(&exp, &v).unwrap().class,
            ScalingClass::LittleO,
            "{v:?}"
        );
    }
    // all rank columns
    for v in [[0usize, 0], [0, 1], [1, 1]] {
        assert_eq!(
            classify_scaling(&exp, &v).unwrap().class,
            ScalingClass::LittleO,
            "{v:?}"
        );
    }
    // max over Ṽ_N has slope 1
    let mut best = None::<(f64, Vec<usize>)>;
    for a in 0..exp.rank0 {
        for b in exp.rank0..l {
            let rep = classify_scaling(&exp, &[a, b]).unwrap();
            let size = rep.values[1].abs();
            if best.as_ref().is_none_or(|(s, _)| size > *s) {
                best = Some((size, vec![a, b]));
            }
        }
    }
    let v = best.unwrap().1;
    let rep = classify_scaling(&exp, &v).unwrap();
    assert_eq!(rep.class, ScalingClass::Theta, "{rep:?}");
    assert!((rep.slope - 1.0).abs() < 0.05);
    // the standalone entry point agrees
    assert_eq!(
        scaling_class(&model, &u, &v).unwrap().class,
        ScalingClass::Theta
    );
    // a single B^v determinant of a diagonal-column choice is Matri of the column
    let a = exp.points[0].factor();
    let m = critfield::covariance_core::matriculate(
        &a.column(0).iter().copied().collect::<Vec<_>>(),
        2,
    )
    .unwrap();
    assert!((bv_determinant(&a, &[0, 0]).unwrap() - m.determinant()).abs() < 1e-12);
}

fn random_unit_l(rng: &mut ChaCha8Rng, l: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..l).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / norm).collect()
}

#[test]
fn limit_polynomial_structure() {
    for n in 2..=3 {
        let model = RadialModel::gaussian(n);
        let h0: LimitPolynomial = limit_polynomial(&model, &reference_direction(n)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10 + n as u64);
        let mut largest: f64 = 0.0;
        for _ in 0..200 {
            let y = random_unit_l(&mut rng, h0.l);
            let v = h0.evaluate(&y).unwrap();
            largest = largest.max(v.abs());
            let flipped = h0.evaluate(&h0.flip(&y)).unwrap();
            assert!((v + flipped).abs() / (1.0 + v.abs()) < 1e-8);
            let c = 1.7;
            let scaled: Vec<f64> = y.iter().map(|x| c * x).collect();
            let vs = h0.evaluate(&scaled).unwrap();
            assert!((vs - c.powi(n as i32) * v).abs() < 1e-10 * (1.0 + vs.abs()));
            assert!((h0.evaluate_monomials(&y) - v).abs() < 1e-10 * (1.0 + v.abs()));
        }
        assert!(largest > 1e-3, "h₀ vanishes identically");
        for key in h0.coefficients.keys() {
            assert_eq!(key.iter().filter(|&&k| k >= h0.rank0).count(), 1);
        }
    }
}

#[test]
fn h_r_converges_to_h0() {
    let n = 2;
    let model = RadialModel::gaussian(n);
    let u = reference_direction(n);
    let exp = eigenpath(&model, &u, &DEFAULT_R_GRID).unwrap();
    let h0 = LimitPolynomial::from_expansion(&exp);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..100 {
        let y = random_unit_l(&mut rng, exp.l);
        let a = h_r_from(&exp, 1e-3, &y).unwrap();
        let b = h0.evaluate(&y).unwrap();
        assert!((a - b).abs() < 1e-2 * b.abs().max(1.0), "{a} vs {b}");
    }
}
