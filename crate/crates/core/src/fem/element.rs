//! Linear (P1) triangle stiffness matrices.

/// Signed area of the triangle `p0 p1 p2` (positive when counter-clockwise).
pub fn signed_area(p: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

/// Shape-function gradient coefficients: `dN_i/dx = b_i / 2A`, `dN_i/dy = c_i / 2A`.
fn gradients(p: &[[f64; 2]; 3]) -> ([f64; 3], [f64; 3]) {
    let mut b = [0.0; 3];
    let mut c = [0.0; 3];
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        b[i] = p[j][1] - p[k][1];
        c[i] = p[k][0] - p[j][0];
    }
    (b, c)
}

/// Unit-conductivity heat conduction element matrix (3x3, row-major).
pub fn thermal_stiffness(p: &[[f64; 2]; 3]) -> [[f64; 3]; 3] {
    let area = signed_area(p);
    let (b, c) = gradients(p);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
        }
    }
    k
}

/// Plane-strain constitutive matrix for Voigt ordering (xx, yy, xy).
pub fn plane_strain_matrix(young: f64, poisson: f64) -> [[f64; 3]; 3] {
    let f = young / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
    [
        [f * (1.0 - poisson), f * poisson, 0.0],
        [f * poisson, f * (1.0 - poisson), 0.0],
        [0.0, 0.0, f * (1.0 - 2.0 * poisson) / 2.0],
    ]
}

/// Plane-strain element matrix (6x6, dofs ordered `u0 v0 u1 v1 u2 v2`), unit thickness.
pub fn plane_strain_stiffness(p: &[[f64; 2]; 3], young: f64, poisson: f64) -> [[f64; 6]; 6] {
    let area = signed_area(p);
    let (b, c) = gradients(p);
    let inv = 1.0 / (2.0 * area);
    let mut bm = [[0.0; 6]; 3];
    for i in 0..3 {
        bm[0][2 * i] = b[i] * inv;
        bm[1][2 * i + 1] = c[i] * inv;
        bm[2][2 * i] = c[i] * inv;
        bm[2][2 * i + 1] = b[i] * inv;
    }
    let d = plane_strain_matrix(young, poisson);
    let mut db = [[0.0; 6]; 3];
    for r in 0..3 {
        for col in 0..6 {
            db[r][col] = (0..3).map(|s| d[r][s] * bm[s][col]).sum();
        }
    }
    let mut k = [[0.0; 6]; 6];
    for i in 0..6 {
        for j in 0..6 {
            k[i][j] = area * (0..3).map(|r| bm[r][i] * db[r][j]).sum::<f64>();
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRI: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.2], [0.3, 0.9]];

    #[test]
    fn thermal_rows_sum_to_zero() {
        let k = thermal_stiffness(&TRI);
        for row in &k {
            assert!(row.iter().sum::<f64>().abs() < 1e-14);
        }
        assert!((k[0][1] - k[1][0]).abs() < 1e-15);
    }

    #[test]
    fn elastic_rigid_modes_have_zero_energy() {
        let k = plane_strain_stiffness(&TRI, 1.0, 0.3);
        let tx = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        let ty = [0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
        let rot: Vec<f64> = TRI.iter().flat_map(|p| [-p[1], p[0]]).collect();
        for mode in [&tx[..], &ty[..], &rot[..]] {
            for row in &k {
                let s: f64 = row.iter().zip(mode).map(|(a, b)| a * b).sum();
                assert!(s.abs() < 1e-14);
            }
        }
        // pure stretch costs energy
        let stretch: Vec<f64> = TRI.iter().flat_map(|p| [p[0], 0.0]).collect();
        let e: f64 = (0..6)
            .map(|i| {
                (0..6)
                    .map(|j| stretch[i] * k[i][j] * stretch[j])
                    .sum::<f64>()
            })
            .sum();
        assert!(e > 0.0);
    }
}
