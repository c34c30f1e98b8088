use super::{BjorlingData, BjorlingError, BjorlingSpec, NormalSpec};

const NAMES: [&str; 4] = ["circle_outward", "line_helicoid", "heisenberg_line", "heisenberg_circle"];

pub fn builtin_data_names() -> &'static [&'static str] {
    &NAMES
}

fn spec(name: &str, beta: [&str; 3], v: [&str; 3], u_range: [f64; 2], periodic: bool) -> BjorlingSpec {
    BjorlingSpec {
        name: Some(name.to_string()),
        beta: beta.iter().map(|s| s.to_string()).collect(),
        normal: NormalSpec::Expressions(v.iter().map(|s| s.to_string()).collect()),
        u_range,
        periodic,
    }
}

pub fn builtin_spec(name: &str) -> Option<BjorlingSpec> {
    use std::f64::consts::{PI, TAU};
    Some(match name {
        // catenoid seed
        "circle_outward" => spec(
            name,
            ["cos(u)", "sin(u)", "0"],
            ["cos(u)", "sin(u)", "0"],
            [0.0, TAU],
            true,
        ),
        // helicoid seed
        "line_helicoid" => spec(
            name,
            ["u", "0", "0"],
            ["0", "-sin(u)", "cos(u)"],
            [-2.0 * PI, 2.0 * PI],
            false,
        ),
        "heisenberg_line" => spec(name, ["u", "0", "0"], ["0", "0", "1"], [-1.0, 1.0], false),
        // horizontal unit circle with V = E1 cos u + E2 sin u, which is
        // g-orthogonal to β' = -sin u ∂1 + cos u ∂2 in the Heisenberg metric
        "heisenberg_circle" => spec(
            name,
            ["cos(u)", "sin(u)", "0"],
            ["cos(u)", "sin(u)", "0"],
            [0.0, TAU],
            true,
        ),
        _ => return None,
    })
}

pub fn builtin_data(name: &str) -> Result<BjorlingData, BjorlingError> {
    let spec = builtin_spec(name).ok_or_else(|| BjorlingError::Unknown(name.to_string()))?;
    BjorlingData::from_spec(&spec)
}
