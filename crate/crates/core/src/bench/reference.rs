/// Objective value at a point of a catalog problem's variable space
/// (slack variables, when present, are ignored).
pub type ReferenceObjective = fn(&[f64]) -> f64;

/// Objective whose gradient the catalog problem `name` exposes.
///
/// The solver never evaluates these; they exist for reporting and for
/// checking the catalog gradients.
pub fn reference_objective(name: &str) -> Option<ReferenceObjective> {
    let f: ReferenceObjective = match name {
        "circle" | "circle_small" => |x| x[0] + x[1],
        "disk_slack" => |x| 0.5 * ((x[0] - 3.0).powi(2) + (x[1] - 3.0).powi(2)),
        "ellipse_prod" => |x| -x[0] * x[1],
        "hs06" | "hs06_scaled" => |x| (1.0 - x[0]).powi(2),
        "hs07" | "hs07_scaled" => |x| (1.0 + x[0] * x[0]).ln() - x[1],
        "hs27" => |x| 0.01 * (x[0] - 1.0).powi(2) + (x[1] - x[0] * x[0]).powi(2),
        "hs28" => |x| (x[0] + x[1]).powi(2) + (x[1] + x[2]).powi(2),
        "hs48" => |x| (x[0] - 1.0).powi(2) + (x[1] - x[2]).powi(2) + (x[3] - x[4]).powi(2),
        "infeasible" => |x| 0.5 * ((x[0] - 1.0).powi(2) + (x[1] - 1.0).powi(2)),
        "lq2" => |x| 0.5 * ((x[0] - 2.0).powi(2) + x[1] * x[1]),
        "mixed_slack" => |x| 0.5 * ((x[0] - 2.0).powi(2) + (x[1] - 2.0).powi(2)),
        "parabola_box" => |x| 0.5 * ((x[0] - 2.0).powi(2) + (x[1] - 1.0).powi(2)),
        "plane3" => |x| 0.5 * ((x[0] - 1.0).powi(2) + (x[1] - 2.0).powi(2) + (x[2] - 3.0).powi(2)),
        "range1" => |x| 0.5 * (x[0] - 3.0).powi(2),
        "rosen_disk" => |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
        "simplex4" => |x| {
            0.5 * x
                .iter()
                .zip([1.0, 2.0, 3.0, 4.0])
                .map(|(v, t)| (v - t).powi(2))
                .sum::<f64>()
        },
        "sphere3" => |x| -x[0] - 2.0 * x[1] - 2.0 * x[2],
        _ => return None,
    };
    Some(f)
}
