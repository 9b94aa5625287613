use std::collections::BTreeMap;
use m3tsp::dissection::{build_quadtree, override_params, Shift};
use m3tsp::instance::generate_instance;
use m3tsp::perturb::perturb;

fn main() {
    let inst = generate_instance(6, 2, 42, 100.0).unwrap();
    let p = perturb(&inst, 0.5).unwrap();
    let params = override_params(0.5, p.l, 4, 2, None).unwrap();
    let tree = build_quadtree(&p, Shift { a: 17 % p.l, b: 23 % p.l }, &params);
    eprintln!("L={} depth={} nodes={}", p.l, tree.depth, tree.nodes.len());
    let t0 = std::time::Instant::now();
    let out = m3tsp::dpcore::solve_tree(&tree, &params, 2, 0, 6, &BTreeMap::new()).unwrap();
    eprintln!("done in {:?} stats {:?}", t0.elapsed(), out.stats);
}
