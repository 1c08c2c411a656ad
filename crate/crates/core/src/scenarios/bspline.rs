//! Additive cubic B-spline mean function for the third two-sample design.

const DEGREE: usize = 3;
const INTERIOR_KNOTS: usize = 6;
const LOWER: f64 = -3.0;
const UPPER: f64 = 3.0;
/// Basis size per coordinate: interior knots + degree + 1.
pub const BASIS_SIZE: usize = INTERIOR_KNOTS + DEGREE + 1;
pub const C3_COEFFICIENT_SEED: u64 = 7_031;

/// Standard normal draws from `C3_COEFFICIENT_SEED`, one row per coordinate.
pub const C3_COEFFICIENTS: [[f64; BASIS_SIZE]; 5] = [
    [
        -0.6360263824001661,
        0.3402969965360726,
        -0.4007136290545503,
        0.06633577185440405,
        0.9912778615153766,
        -0.44814927963082063,
        0.5991344085133807,
        -2.2656341552661305,
        -0.14288333378043655,
        0.1494285192121084,
    ],
    [
        -1.007337251449278,
        0.5258220166408811,
        -1.337579259983341,
        -1.1550549028851023,
        -0.4640369465146209,
        -0.3689813988095131,
        -0.47035054925605135,
        0.08645982120937477,
        -0.596497766418881,
        0.8867764960867951,
    ],
    [
        1.1700755581619122,
        0.11160225888102952,
        0.8351067594654299,
        -1.3046650103706359,
        -1.5010624436229263,
        1.7505287728443355,
        -2.6478051521492887,
        -0.787695931595356,
        -0.47312364265460977,
        1.1352710217302497,
    ],
    [
        -0.7736729360063995,
        0.2504863225055049,
        -0.6438571748378373,
        -3.151044594902158,
        0.3575545889987122,
        -0.19166956748845396,
        -0.6558624060897325,
        0.8353746045955033,
        0.19085890247034004,
        -0.8099080587637176,
    ],
    [
        0.2265423026051361,
        -0.7537019078412666,
        -0.9156510977927499,
        0.9454301560825269,
        1.8816504404302496,
        0.8405826649118809,
        0.2478304457541734,
        -0.5029492423888005,
        1.7901054905433842,
        -1.9557376884658424,
    ],
];

/// Clamped knot vector: boundary knots repeated `DEGREE + 1` times around
/// six uniform interior knots on `[-3, 3]`.
pub fn spline_knots() -> Vec<f64> {
    let mut t = vec![LOWER; DEGREE + 1];
    let step = (UPPER - LOWER) / (INTERIOR_KNOTS + 1) as f64;
    t.extend((1..=INTERIOR_KNOTS).map(|i| LOWER + step * i as f64));
    t.extend(std::iter::repeat_n(UPPER, DEGREE + 1));
    t
}

/// All cubic basis functions at `x` (clamped to `[-3, 3]`) by the Cox–de
/// Boor recursion.
pub fn cubic_bspline_basis(x: f64) -> [f64; BASIS_SIZE] {
    let t = spline_knots();
    let x = x.clamp(LOWER, UPPER);
    let nint = t.len() - 1;
    // degree-0 indicators, with the last nonempty interval closed on the right
    let mut b: Vec<f64> = (0..nint)
        .map(|i| {
            let inside = t[i] <= x && x < t[i + 1];
            let right_end = x == UPPER && t[i] < t[i + 1] && t[i + 1] == UPPER;
            if inside || right_end { 1.0 } else { 0.0 }
        })
        .collect();
    for p in 1..=DEGREE {
        let next: Vec<f64> = (0..nint - p)
            .map(|i| {
                let left = if t[i + p] > t[i] { (x - t[i]) / (t[i + p] - t[i]) * b[i] } else { 0.0 };
                let right = if t[i + p + 1] > t[i + 1] {
                    (t[i + p + 1] - x) / (t[i + p + 1] - t[i + 1]) * b[i + 1]
                } else {
                    0.0
                };
                left + right
            })
            .collect();
        b = next;
    }
    let mut out = [0.0; BASIS_SIZE];
    out.copy_from_slice(&b[..BASIS_SIZE]);
    out
}

/// `θ(x) = Σ_k Σ_b c_{k,b} B_b(x_k)` over the first five coordinates.
pub fn additive_spline_mean(x: &[f64]) -> f64 {
    x.iter()
        .zip(&C3_COEFFICIENTS)
        .map(|(&v, c)| cubic_bspline_basis(v).iter().zip(c).map(|(b, c)| b * c).sum::<f64>())
        .sum()
}
