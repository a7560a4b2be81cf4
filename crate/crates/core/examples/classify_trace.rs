//! Classifying a hand-built trace: three LSA nodes improve their views, one
//! node leaves, the survivors settle again. The monitors report each
//! property with its witness and the resulting class.

use std::collections::BTreeSet;
use std::sync::Arc;

use selforg::criteria::proximity::ProximityCriterion;
use selforg::criteria::GlobalCriterion;
use selforg::lsa::{lsa_configuration, LsaModel};
use selforg::model::Trace;
use selforg::monitors::{classify, KernelKind};
use selforg::overlays::settle;
use selforg::{Action, NodeId};

fn main() {
    let ids = |v: &[u64]| v.iter().map(|x| NodeId(*x)).collect::<BTreeSet<_>>();
    let c0 = lsa_configuration(&[
        (NodeId(0), vec![0, 0], ids(&[3])),
        (NodeId(1), vec![5, 0], ids(&[3])),
        (NodeId(2), vec![10, 0], ids(&[0])),
        (NodeId(3), vec![40, 0], ids(&[1, 2])),
    ]);
    let model = LsaModel { criterion: Arc::new(ProximityCriterion) };
    let crit = GlobalCriterion::new(Arc::new(ProximityCriterion));

    let mut t = Trace::new(c0);
    for a in settle(&model, t.last(), 100).unwrap().0 {
        t.push(a).unwrap();
    }
    t.push(Action::disconnect(NodeId(3))).unwrap();
    let views: Vec<_> = t
        .last()
        .active()
        .map(|p| (p, t.last().neighbors(p).iter().filter(|q| t.last().is_active(**q)).copied().collect()))
        .collect();
    for (p, view) in views {
        t.push(Action::step(p, selforg::model::Step { neighbors: Some(view), ..Default::default() })).unwrap();
    }
    for a in settle(&model, t.last(), 100).unwrap().0 {
        t.push(a).unwrap();
    }

    println!("{} actions, {} fragments", t.len(), t.fragments().len());
    let v = classify(&t, &crit, &model, KernelKind::Topological).unwrap();
    for r in &v.results {
        println!(
            "{:?}: {:?}{}",
            r.property,
            r.status,
            r.witness.as_ref().map(|w| format!(" ({})", w.note)).unwrap_or_default()
        );
    }
    println!("class: {}", v.class);
}
