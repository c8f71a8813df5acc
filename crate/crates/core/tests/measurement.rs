//! Cross-module measurement checks at extension-field and even-Gauss-sum
//! sizes, ahead of the full acceptance sweep.

use conjstab::ff::{make_field, MultiplicativeChar, Parity};
use conjstab::hsp::{
    brute_force_distribution, closed_form_distribution, conditional_row_fourier_distribution,
    Branch,
};
use conjstab::pgroup::{Group, GroupFlavor};

const TOL: f64 = 1e-9;

#[test]
fn pgl_q9_weak_mass_and_distribution() {
    let f = make_field(3, 2).unwrap();
    let pgl = Group::new(GroupFlavor::Pgl, &f).unwrap();
    for bv in 0..9 {
        let b = f.element_from_val(bv).unwrap();
        let report = brute_force_distribution(&pgl, b).unwrap();
        assert!((report.rho_mass - 8.0 / 9.0).abs() < TOL);
        let (_, dist) = &report.branches[0];
        assert!(dist.is_normalized());
        let closed = closed_form_distribution(&pgl, b, Branch::Full).unwrap();
        assert!(dist.max_abs_diff(&closed) < TOL);
        assert!((dist.prob(bv) - 8.0 / 9.0).abs() < TOL);
    }
}

#[test]
fn psl_q9_even_d_offpeak_split() {
    // q = 9 = 1 mod 4, so the quadratic Gauss sum is real (d even) and the
    // off-peak probabilities split into (q +- 2 sqrt q + 1)/(2q(q-1)) with
    // multiplicity (q-1)/2 each inside every branch.
    let f = make_field(3, 2).unwrap();
    assert_eq!(
        f.gauss_sum(MultiplicativeChar::Quadratic, f.frequency_from_val(1).unwrap())
            .d_parity(),
        Some(Parity::Even)
    );
    let psl = Group::new(GroupFlavor::Psl, &f).unwrap();
    let q = 9.0f64;
    let hi = (q + 2.0 * q.sqrt() + 1.0) / (2.0 * q * (q - 1.0)); // 16/144
    let lo = (q - 2.0 * q.sqrt() + 1.0) / (2.0 * q * (q - 1.0)); // 4/144
    for bv in 0..9 {
        let b = f.element_from_val(bv).unwrap();
        let report = brute_force_distribution(&psl, b).unwrap();
        for (branch, dist) in &report.branches {
            assert!(dist.is_normalized());
            assert!((dist.prob(bv) - 4.0 / 9.0).abs() < TOL); // (q-1)/2q
            let closed = closed_form_distribution(&psl, b, *branch).unwrap();
            assert!(dist.max_abs_diff(&closed) < TOL);
            let mut hi_count = 0;
            let mut lo_count = 0;
            for lv in 0..9 {
                if lv == bv {
                    continue;
                }
                let p = dist.prob(lv);
                if (p - hi).abs() < TOL {
                    hi_count += 1;
                } else if (p - lo).abs() < TOL {
                    lo_count += 1;
                } else {
                    panic!("off-peak value {p} matches neither split value");
                }
            }
            assert_eq!((hi_count, lo_count), (4, 4)); // (q-1)/2 each
        }
    }
}

#[test]
fn psl_q9_mid_level_route_matches() {
    let f = make_field(3, 2).unwrap();
    let psl = Group::new(GroupFlavor::Psl, &f).unwrap();
    let b = f.element_from_val(5).unwrap();
    for k in f.nonzero_elements() {
        let branch = if f.is_square(k) { Branch::Plus } else { Branch::Minus };
        let mid = conditional_row_fourier_distribution(&psl, b, k).unwrap();
        let closed = closed_form_distribution(&psl, b, branch).unwrap();
        assert!(mid.max_abs_diff(&closed) < TOL, "column {}", k.val());
    }
}

#[test]
fn pgl_peak_identity_is_exact_in_rationals() {
    // (1 - 1/q) + (q-1) * 1/(q(q-1)) = 1, symbolically.
    for q in [5u64, 7, 9, 11, 13] {
        let peak = num_rational::Ratio::new(q - 1, q);
        let off = num_rational::Ratio::new(1, q * (q - 1));
        let total = peak + num_rational::Ratio::from_integer(q - 1) * off;
        assert_eq!(total, num_rational::Ratio::from_integer(1));
    }
}

#[test]
fn eta_balance_among_offpeak_differences() {
    // The multiplicity split comes from eta(b - l) taking each sign equally
    // often over l != b.
    for (p, n) in [(5u32, 1u32), (3, 2), (13, 1)] {
        let f = make_field(p, n).unwrap();
        for b in f.elements() {
            let mut plus = 0;
            let mut minus = 0;
            for l in f.elements() {
                if l == b {
                    continue;
                }
                match f.quadratic_char(f.sub(b, l).unwrap()) {
                    1 => plus += 1,
                    -1 => minus += 1,
                    _ => unreachable!("difference is nonzero"),
                }
            }
            assert_eq!(plus, minus);
            assert_eq!(plus, (f.q() as usize - 1) / 2);
        }
    }
}
