//! `aontmesh route` — plan and visualize the two disjoint routes for one
//! source/destination pair.

use crate::{parse_coord, parse_mesh, CliError};
use aontmesh::rng::DetRng;
use aontmesh::routing::{intermediates, plan_routes, regions, Coord, MeshDims};
use clap::Args;

#[derive(Args)]
pub struct RouteArgs {
    /// Mesh size as WxH, e.g. 4x4.
    #[arg(long, value_parser = parse_mesh)]
    mesh: MeshDims,
    /// Source router as x,y.
    #[arg(long, value_parser = parse_coord)]
    src: Coord,
    /// Destination router as x,y.
    #[arg(long, value_parser = parse_coord)]
    dst: Coord,
    /// Pivot-draw seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

pub fn run(args: RouteArgs) -> Result<(), CliError> {
    let dims = args.mesh;
    for (what, c) in [("src", args.src), ("dst", args.dst)] {
        if !dims.contains(c) {
            return Err(CliError::Data(format!(
                "{what} {c} is outside the {}x{} mesh",
                dims.width(),
                dims.height()
            )));
        }
    }
    let reg = regions(args.src, args.dst, dims)?;
    let mut rng = DetRng::new(args.seed);
    let plan = plan_routes(args.src, args.dst, dims, &mut rng)?;

    println!(
        "mesh {}x{}, src {} -> dst {} (seed {})",
        dims.width(),
        dims.height(),
        args.src,
        args.dst,
        args.seed
    );
    println!("case: {}", plan.kind);
    println!("flip_route: {}", plan.flip_route);
    println!(
        "pivot regions: blue {} candidates, red {} candidates",
        reg.blue.len(),
        reg.red.len()
    );
    if !plan.protected {
        println!("NOTE: degraded fallback — no admissible pivots, single XY path used");
    } else {
        println!("pivots: blue {} red {}", plan.pivot_blue, plan.pivot_red);
    }
    println!("blue path ({} hops): {}", plan.path_blue.len() - 1, fmt_path(&plan.path_blue));
    println!("red  path ({} hops): {}", plan.path_red.len() - 1, fmt_path(&plan.path_red));

    let bi = intermediates(&plan.path_blue, args.src, args.dst);
    let ri = intermediates(&plan.path_red, args.src, args.dst);
    let shared: Vec<&Coord> = bi.iter().filter(|c| ri.contains(c)).collect();
    println!(
        "intermediate routers: blue {{{}}}, red {{{}}}",
        fmt_set(&bi),
        fmt_set(&ri)
    );
    if plan.protected {
        println!(
            "disjoint: {}",
            if shared.is_empty() {
                "yes (no shared intermediate router)"
            } else {
                "NO — shared routers found"
            }
        );
    }

    println!();
    print_grid(dims, &args, &plan.path_blue, &plan.path_red, plan.protected, plan.pivot_blue, plan.pivot_red);
    println!();
    println!("legend: S src, D dst, B blue pivot, R red pivot, b/r path routers, + both paths, . unused");
    Ok(())
}

fn fmt_path(path: &[Coord]) -> String {
    path.iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn fmt_set(set: &[Coord]) -> String {
    set.iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn print_grid(
    dims: MeshDims,
    args: &RouteArgs,
    blue: &[Coord],
    red: &[Coord],
    protected: bool,
    pb: Coord,
    pr: Coord,
) {
    for y in 0..dims.height() {
        let mut row = String::new();
        for x in 0..dims.width() {
            let c = aontmesh::routing::xy(x, y);
            let on_blue = blue.contains(&c);
            let on_red = red.contains(&c);
            let ch = if c == args.src {
                'S'
            } else if c == args.dst {
                'D'
            } else if protected && c == pb {
                'B'
            } else if protected && c == pr {
                'R'
            } else if on_blue && on_red {
                '+'
            } else if on_blue {
                'b'
            } else if on_red {
                'r'
            } else {
                '.'
            };
            row.push(ch);
            row.push(' ');
        }
        println!("  {row}");
    }
}
