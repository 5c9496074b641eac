//! Frozen figure-reproduction configurations. All share `V = 40`, `ε = 0.01`,
//! `β = 0.95`, `T_A = 0.5`; changing any value needs `--allow-override`.

const SCHEME: &str = "[scheme]\nv = 40.0\nbeta = 0.95\neps = 0.01\nt_a = 0.5\n";
const RATE: &str = "[sweep]\naxis = \"distance-km\"\nkind = \"rate\"\nstart = 0.0\nstop = 320.0\nstep = 5.0\n";
const NOISE: &str = "[sweep]\naxis = \"distance-km\"\nkind = \"tolerable-noise\"\nstart = 0.0\nstop = 300.0\nstep = 10.0\n";

const ALICE_K123: &str = r#"
[[curves]]
name = "alice-k1"
k_alice = 1

[[curves]]
name = "alice-k2"
k_alice = 2

[[curves]]
name = "alice-k3"
k_alice = 3
"#;

const BOB_K123: &str = r#"
[[curves]]
name = "bob-k1"
k_bob = 1

[[curves]]
name = "bob-k2"
k_bob = 2

[[curves]]
name = "bob-k3"
k_bob = 3
"#;

const VS_ONE_WAY: &str = r#"
[[curves]]
name = "two-way-alice-k1"
k_alice = 1

[[curves]]
name = "two-way-original"

[[curves]]
name = "one-way-gg02"
protocol = "one-way"

[[curves]]
name = "one-way-k1"
protocol = "one-way"
k_alice = 1
"#;

const BOB_VS_ORIGINAL: &str = r#"
[[curves]]
name = "two-way-bob-k1"
k_bob = 1

[[curves]]
name = "two-way-original"
"#;

const ONE_WAY_K1: &str = r#"
[[curves]]
name = "one-way-k1"
protocol = "one-way"
k_alice = 1
"#;

const PLACEMENTS: &str = r#"
[[curves]]
name = "alice-k1"
k_alice = 1

[[curves]]
name = "bob-k1"
k_bob = 1

[[curves]]
name = "both-k1"
k_alice = 1
k_bob = 1
"#;

pub const NAMES: [&str; 10] = [
    "fig3c", "fig3d", "fig4a", "fig4b", "fig5a", "fig5b", "fig6a", "fig6b", "fig7a", "fig7b",
];

/// TOML text of preset `name`.
pub fn preset(name: &str) -> Option<String> {
    let (sweep, curves) = match name {
        "fig3c" => (RATE, ALICE_K123.to_owned()),
        "fig3d" => (NOISE, ALICE_K123.to_owned()),
        "fig4a" => (RATE, VS_ONE_WAY.to_owned()),
        "fig4b" => (NOISE, VS_ONE_WAY.to_owned()),
        "fig5a" => (RATE, BOB_K123.to_owned()),
        "fig5b" => (NOISE, BOB_K123.to_owned()),
        "fig6a" => (RATE, format!("{BOB_VS_ORIGINAL}{ONE_WAY_K1}")),
        "fig6b" => (NOISE, BOB_VS_ORIGINAL.to_owned()),
        "fig7a" => (RATE, PLACEMENTS.to_owned()),
        "fig7b" => (NOISE, PLACEMENTS.to_owned()),
        _ => return None,
    };
    Some(format!("{SCHEME}\n{sweep}{curves}"))
}
