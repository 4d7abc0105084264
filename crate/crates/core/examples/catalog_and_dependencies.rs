//! Browse the bundled control catalog, add prerequisite edges and see how
//! validation reports problems.
//!
//!     cargo run --example catalog_and_dependencies

use std::collections::BTreeMap;

use isms_maturity::catalog::Edge;
use isms_maturity::{ControlCatalog, ControlId, DependencyGraph};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let catalog = ControlCatalog::shipped();
    println!("{} controls", catalog.len());

    let mut per_section: BTreeMap<u8, (String, usize)> = BTreeMap::new();
    for c in catalog.controls() {
        per_section
            .entry(c.id.section())
            .or_insert_with(|| (c.section_name.clone(), 0))
            .1 += 1;
    }
    for (section, (name, n)) in &per_section {
        println!("  A.{section:<3} {n:>2}  {name}");
    }

    let id = |s: &str| -> ControlId { s.parse().unwrap() };
    let policy = catalog.get(&id("5.1.1")).unwrap();
    println!("\n{}: {}", policy.id, policy.title);
    for e in catalog.dependencies().edges() {
        println!("bundled dependency: {e}");
    }

    // A hypothetical extension: access policy before user registration,
    // registration before provisioning.
    let mut graph = catalog.dependencies().clone();
    graph.insert(Edge::new(id("A.9.1.1"), id("A.9.2.1")));
    graph.insert(Edge::new(id("A.9.2.1"), id("A.9.2.2")));
    let extended = ControlCatalog::new(catalog.controls().to_vec(), graph)?;
    let order = extended.topological_order();
    let pos = |c: &str| order.iter().position(|x| *x == id(c)).unwrap();
    println!(
        "\ntopological positions: A.9.1.1={} A.9.2.1={} A.9.2.2={}",
        pos("A.9.1.1"),
        pos("A.9.2.1"),
        pos("A.9.2.2")
    );

    // Problems are collected, not thrown one at a time.
    let broken = DependencyGraph::new([
        Edge::new(id("A.12.1.1"), id("A.12.1.2")),
        Edge::new(id("A.12.1.2"), id("A.12.1.3")),
        Edge::new(id("A.12.1.3"), id("A.12.1.1")),
        Edge::new(id("A.8.1.1"), id("A.8.1.1")),
    ]);
    println!("\nvalidating a broken graph:");
    for f in broken.validate(&catalog.ids()).findings {
        println!("  {f}");
    }
    match ControlCatalog::new(catalog.controls().to_vec(), broken) {
        Ok(_) => println!("unexpectedly accepted"),
        Err(e) => println!("catalog rejected: {e}"),
    }
    Ok(())
}
