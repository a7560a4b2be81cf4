//! CAN zone maintenance: nodes join a 2-d torus one by one, then one leaves
//! and a neighbor takes its zone over. The partition and neighbor relations
//! are checked after every change.

use selforg::model::{apply_action, Configuration};
use selforg::overlays::can::{
    can_join, can_leave_repair, can_state, check_neighbors, check_partition, point_from_unit, CanModel, SCALE,
};
use selforg::NodeId;

fn show(c: &Configuration) {
    for p in c.active() {
        let s = can_state(c, p).unwrap();
        let zones: Vec<String> = s
            .zones
            .iter()
            .map(|z| {
                let r: Vec<String> = (0..z.dims())
                    .map(|k| format!("[{:.3},{:.3})", z.lo[k] as f64 / SCALE as f64, z.hi[k] as f64 / SCALE as f64))
                    .collect();
                r.join("x")
            })
            .collect();
        println!(
            "  {p}: {} neighbors {:?}",
            zones.join(" + "),
            s.neighbors.keys().map(|q| q.to_string()).collect::<Vec<_>>()
        );
    }
}

fn apply_all(c: Configuration, actions: &[selforg::Action]) -> Configuration {
    actions.iter().fold(c, |c, a| apply_action(&c, a).unwrap())
}

fn main() {
    let model = CanModel { dims: 2 };
    let points = [[0.1, 0.2], [0.7, 0.6], [0.3, 0.8], [0.8, 0.1], [0.55, 0.45], [0.2, 0.5]];
    let mut c = Configuration::new("can");
    for (i, x) in points.iter().enumerate() {
        let bootstrap = (i > 0).then_some(NodeId(0));
        let acts = can_join(&c, &model, NodeId(i as u64), bootstrap, point_from_unit(x)).unwrap();
        c = apply_all(c, &acts);
        check_partition(&c, 2).unwrap();
        check_neighbors(&c).unwrap();
        println!("after join of n{i} ({} actions):", acts.len());
    }
    show(&c);

    let acts = can_leave_repair(&c, &model, NodeId(4)).unwrap();
    c = apply_all(c, &acts);
    check_partition(&c, 2).unwrap();
    check_neighbors(&c).unwrap();
    println!("after n4 leaves ({} repair actions):", acts.len() - 1);
    show(&c);
}
