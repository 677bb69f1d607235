//! Published reference values used by the integration tests.

use lndimer::Species;

/// `(C, u(C))` in `E_h a0^6`, ordered as `TensorOp::ALL`.
pub fn table_coefficients(species: Species) -> [(f64, f64); 7] {
    match species {
        Species::Er => [
            (-1723.072389927, 65.0),
            (1.903660883, 0.57),
            (0.171750953, 0.099),
            (0.242892527, 0.14),
            (-0.000943784, 0.00055),
            (-0.001128037, 0.00066),
            (-0.009080527, 0.0053),
        ],
        Species::Tm => [
            (-1672.115030649, 54.0),
            (0.788488761, 1.47),
            (0.001566976, 0.012),
            (0.002216039, 0.017),
            (-0.000309025, 0.00060),
            (-0.000369355, 0.00072),
            (-0.002973250, 0.0058),
        ],
    }
}

/// Correlations among `C0(1), C2(1), C0(2), C0(3)`.
pub fn table_correlations(species: Species) -> [[f64; 4]; 4] {
    match species {
        Species::Er => [
            [1.00, -0.38, -0.50, 0.32],
            [-0.38, 1.00, 0.37, -1.00],
            [-0.50, 0.37, 1.00, -0.34],
            [0.32, -1.00, -0.34, 1.00],
        ],
        Species::Tm => [
            [1.00, -0.03, 0.15, 0.05],
            [-0.03, 1.00, -0.10, -1.00],
            [0.15, -0.10, 1.00, 0.09],
            [0.05, -1.00, 0.09, 1.00],
        ],
    }
}

pub const B_E: [(Species, f64); 2] = [(Species::Er, 0.0095), (Species::Tm, 0.0096)];
pub const VIB_SPACING: [(Species, f64); 2] = [(Species::Er, 27.0), (Species::Tm, 27.2)];
pub const ER_R_E: f64 = 8.70;
pub const ER_LADDER_UNIT: f64 = 2.3;
