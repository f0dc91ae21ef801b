//! Ready-made systems used by tests, examples and the CLI.

use crate::linalg::IVec;
use crate::system::ConvolutionSystem;
use crate::types::AdmissiblePair;

/// The quarter Cantor pair `(4, {0,2}, {0,1})`.
pub fn jp_pair() -> AdmissiblePair {
    AdmissiblePair::from_raw("q", &[vec![4]], &[vec![0], vec![2]], Some(&[vec![0], vec![1]]))
        .expect("valid pair")
}

/// The self-similar quarter Cantor system.
pub fn jp() -> ConvolutionSystem {
    ConvolutionSystem::constant(jp_pair())
}

/// `(3, {0,2}, {0,1})`, which is not admissible.
pub fn cantor3_pair() -> AdmissiblePair {
    AdmissiblePair::from_raw("c", &[vec![3]], &[vec![0], vec![2]], Some(&[vec![0], vec![1]]))
        .expect("valid pair data")
}

pub fn example1_p1() -> AdmissiblePair {
    AdmissiblePair::from_raw(
        "p1",
        &[vec![4, 0], vec![4, -4]],
        &[vec![2, 0], vec![3, 0], vec![2, 1], vec![3, 1]],
        Some(&[vec![0, 0], vec![2, 0], vec![2, -2], vec![4, -2]]),
    )
    .expect("valid pair")
}

pub fn example1_p2() -> AdmissiblePair {
    AdmissiblePair::from_raw(
        "p2",
        &[vec![3, -3], vec![3, 3]],
        &[vec![0, 2], vec![1, 2], vec![0, 3]],
        Some(&[vec![0, 0], vec![3, 1], vec![3, -1]]),
    )
    .expect("valid pair")
}

/// Two-pair planar menu `{p1, p2}`.
pub fn example1_menu() -> Vec<AdmissiblePair> {
    vec![example1_p1(), example1_p2()]
}

/// The periodic word `p1 p2 p1 p2 ...` over the planar menu.
pub fn example1_alternating() -> ConvolutionSystem {
    ConvolutionSystem::from_names(example1_menu(), &[], &["p1", "p2"]).expect("valid word")
}

/// An arbitrary finite word over the planar menu (`0` = p1, `1` = p2).
pub fn example1_word(word: &[usize]) -> ConvolutionSystem {
    ConvolutionSystem::new(example1_menu(), word.to_vec(), vec![]).expect("valid word")
}

/// Pair at level `n` of the diagonal family: `diag(3,3)` with three digits
/// at odd levels, `diag(n,n)` with `{0, (n-1,n-1)}` at even levels.
pub fn example2_pair(n: usize) -> AdmissiblePair {
    if n % 2 == 1 {
        AdmissiblePair::from_raw(
            "odd",
            &[vec![3, 0], vec![0, 3]],
            &[vec![0, 0], vec![0, 1], vec![1, 0]],
            Some(&[vec![0, 0], vec![1, 2], vec![2, 1]]),
        )
        .expect("valid pair")
    } else {
        let m = n as i64;
        // (n-1)(n/2)/n = (n-1)/2 is a half-integer since n is even
        AdmissiblePair::from_raw(
            &format!("even{n}"),
            &[vec![m, 0], vec![0, m]],
            &[vec![0, 0], vec![m - 1, m - 1]],
            Some(&[vec![0, 0], vec![m / 2, 0]]),
        )
        .expect("valid pair")
    }
}

/// The first `len` levels of the diagonal family as an explicit finite word.
/// All odd levels share the single menu entry `odd`.
pub fn example2_prefix(len: usize) -> ConvolutionSystem {
    let mut menu = vec![example2_pair(1)];
    let mut word = Vec::with_capacity(len);
    for n in 1..=len {
        if n % 2 == 1 {
            word.push(0);
        } else {
            word.push(menu.len());
            menu.push(example2_pair(n));
        }
    }
    ConvolutionSystem::new(menu, word, vec![]).expect("valid word")
}

/// `(2, {0,1}, {0,1})`, whose measure is the Lebesgue measure on `[0,1]`.
pub fn binary_pair() -> AdmissiblePair {
    AdmissiblePair::from_raw("h", &[vec![2]], &[vec![0], vec![1]], Some(&[vec![0], vec![1]]))
        .expect("valid pair")
}

/// Lattice points of `[-r, r]^d` in lexicographic order.
pub fn lattice_box(dim: usize, r: i64) -> Vec<IVec> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|v: IVec| {
                (-r..=r).map(move |x| {
                    let mut w = v.clone();
                    w.push(x);
                    w
                })
            })
            .collect();
    }
    out
}
