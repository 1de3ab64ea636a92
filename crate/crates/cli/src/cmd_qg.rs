//! `aontmesh qg` — generate and print a quasigroup and its dual.

use crate::CliError;
use aontmesh::quasigroup::{random_key, AontParams, Quasigroup};
use aontmesh::rng::DetRng;
use clap::Args;

#[derive(Args)]
pub struct QgArgs {
    /// Supported modulus: 3, 5, 17, 257 or 65537.
    #[arg(long)]
    prime: u32,
    /// Key-draw seed; the same seed always prints identical bytes.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

/// Largest table printed in full; 65537 gets a summary instead.
const GRID_LIMIT: u32 = 257;

pub fn run(args: QgArgs) -> Result<(), CliError> {
    let params = AontParams::new(args.prime)?;
    let mut rng = DetRng::new(args.seed);
    let key = random_key(&mut rng, params);
    let q = Quasigroup::generate(&key, params)?;
    let n = params.n;

    println!(
        "quasigroup over symbols 1..={n} (mod {}), seed {}",
        params.p, args.seed
    );
    println!("key: {}", join(&key));
    println!("leader: {}", q.leader());

    if params.p <= GRID_LIMIT {
        println!();
        print_grid("a*b (table)", n, |a, b| q.mul(a, b));
        println!();
        print_grid("a\u{2022}b (dual)", n, |a, b| q.dual_mul(a, b));
    } else {
        // 65536x65536 entries is not a useful printout; show the shape and
        // prove the pair of tables is consistent on a sample instead.
        println!("table: {n}x{n} (too large to print; showing spot checks)");
        let mut probe = DetRng::new(args.seed ^ 0x51);
        for _ in 0..8 {
            let a = 1 + probe.gen_range(n as u64) as u32;
            let b = 1 + probe.gen_range(n as u64) as u32;
            let c = q.mul(a, b);
            println!(
                "  {a} * {b} = {c}; {a} \u{2022} {c} = {} (recovers b)",
                q.dual_mul(a, c)
            );
        }
    }
    Ok(())
}

fn join(xs: &[u32]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn print_grid(title: &str, n: u32, f: impl Fn(u32, u32) -> u32) {
    let w = n.to_string().len();
    println!("{title}:");
    print!("{:>w$} |", "", w = w + 2);
    for b in 1..=n {
        print!(" {b:>w$}");
    }
    println!();
    println!("{}-+{}", "-".repeat(w + 3), "-".repeat((w + 1) * n as usize));
    for a in 1..=n {
        print!("a={a:>w$} |");
        for b in 1..=n {
            print!(" {:>w$}", f(a, b));
        }
        println!();
    }
}
