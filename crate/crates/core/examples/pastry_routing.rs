//! Pastry tables: sixteen nodes join a ring of 2^12 keys (b = 2, 6 digits),
//! then a key is routed from every node and the tables are audited.

use selforg::model::{apply_action, Configuration};
use selforg::overlays::pastry::{
    check_leaf_sets, check_routing_prefixes, pastry_join, pastry_state, route, PastryModel, PastryParams,
};
use selforg::NodeId;

fn main() {
    let params = PastryParams { b: 2, digits: 6, leaf: 4, neighborhood: 4, maintenance_period: 16 };
    let model = PastryModel { params };
    let mut c = Configuration::new("pastry");
    for i in 0..16u64 {
        let key = (i * 2654435761) % params.ring();
        let coord = ((i as i64 * 37) % 100, (i as i64 * 61) % 100);
        let acts = pastry_join(&c, &model, NodeId(i), (i > 0).then_some(NodeId(0)), key, coord).unwrap();
        c = acts.iter().fold(c, |c, a| apply_action(&c, a).unwrap());
    }
    check_routing_prefixes(&c, &params).unwrap();
    check_leaf_sets(&c, &params).unwrap();

    for p in c.active().take(4) {
        let s = pastry_state(&c, p).unwrap();
        let filled = s.routing.iter().flatten().filter(|e| e.is_some()).count();
        println!("{p} key {:#05x}: {filled} routing entries, leaf {:?}", s.key, s.leaf);
    }
    let target = 0xabc % params.ring();
    let owner = c
        .active()
        .min_by_key(|q| {
            selforg::overlays::pastry::ring_distance(pastry_state(&c, *q).unwrap().key, target, params.ring())
        })
        .unwrap();
    for p in c.active() {
        let path = route(&c, &params, p, target);
        assert_eq!(path.last(), Some(&owner));
        if p.0 % 5 == 0 {
            println!("route {p} -> key {target:#05x}: {:?}", path);
        }
    }
    println!("every route ends at {owner}, the numerically closest node");
}
