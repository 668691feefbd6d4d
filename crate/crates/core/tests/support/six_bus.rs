//! A small feeder for brute-force comparisons: trunk 1-2-3-4-5 with a
//! lateral 3-6, heavy enough that the far end sags below 0.95 pu.

#![allow(dead_code)]

use dgsite::grid::{Branch, Bus, Network, SystemBase};

pub fn six_bus() -> Network {
    let load = |id, p, q| Bus {
        id,
        p_load_kw: p,
        q_load_kvar: q,
        is_slack: false,
    };
    let line = |from, to, r_ohm, x_ohm| Branch { from, to, r_ohm, x_ohm };
    let buses = vec![
        Bus {
            id: 1,
            p_load_kw: 0.0,
            q_load_kvar: 0.0,
            is_slack: true,
        },
        load(2, 150.0, 80.0),
        load(3, 200.0, 100.0),
        load(4, 250.0, 120.0),
        load(5, 300.0, 150.0),
        load(6, 180.0, 90.0),
    ];
    let branches = vec![
        line(1, 2, 0.9, 0.5),
        line(2, 3, 1.6, 0.9),
        line(3, 4, 2.2, 1.2),
        line(4, 5, 2.6, 1.6),
        line(3, 6, 2.0, 1.1),
    ];
    Network::new(buses, branches, SystemBase::default()).expect("six-bus feeder is radial")
}
