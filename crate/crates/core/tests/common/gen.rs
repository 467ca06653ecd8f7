//! Seeded random global types for property tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use routed_mpst::{Arm, GlobalType, MsgLabel, Role};

pub const ROLES: [&str; 4] = ["A", "B", "C", "S"];
const LABELS: [&str; 5] = ["M", "N", "X", "Y", "Z"];

pub struct Gen {
    rng: ChaCha8Rng,
    /// Recursion variables in scope and whether each is guarded yet.
    scope: Vec<(String, bool)>,
    next_var: usize,
    /// Share one continuation between the arms of a choice, which keeps
    /// third-party projections mergeable most of the time.
    shared_tails: bool,
    recursion: bool,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            scope: Vec::new(),
            next_var: 0,
            shared_tails: false,
            recursion: true,
        }
    }

    /// Generator biased towards well-formed types.
    pub fn wf_biased(seed: u64) -> Self {
        Gen { shared_tails: true, ..Gen::new(seed) }
    }

    /// Generator producing only finite types.
    pub fn finite(seed: u64) -> Self {
        Gen { recursion: false, ..Gen::new(seed) }
    }

    /// Treat `t` as a free, guarded variable of the generated type.
    pub fn with_free_var(mut self, t: &str) -> Self {
        self.scope.push((t.to_string(), true));
        self
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn role(&mut self) -> Role {
        Role::from_static(ROLES[self.rng.random_range(0..ROLES.len())])
    }

    pub fn pair(&mut self) -> (Role, Role) {
        let p = self.rng.random_range(0..ROLES.len());
        let q = (p + self.rng.random_range(1..ROLES.len())) % ROLES.len();
        (Role::from_static(ROLES[p]), Role::from_static(ROLES[q]))
    }

    fn labels(&mut self, n: usize) -> Vec<MsgLabel> {
        let start = self.rng.random_range(0..LABELS.len());
        (0..n).map(|i| MsgLabel::new(LABELS[(start + i) % LABELS.len()])).collect()
    }

    /// A closed canonical global type with roughly `size` interactions.
    pub fn global(&mut self, size: usize) -> GlobalType {
        self.node(size)
    }

    fn node(&mut self, size: usize) -> GlobalType {
        if size == 0 {
            let guarded: Vec<String> = self.scope.iter().filter(|(_, g)| *g).map(|(t, _)| t.clone()).collect();
            if !guarded.is_empty() && self.rng.random_bool(0.5) {
                let i = self.rng.random_range(0..guarded.len());
                return GlobalType::var(guarded[i].clone());
            }
            return GlobalType::End;
        }
        if self.recursion && self.rng.random_bool(0.15) {
            let t = format!("t{}", self.next_var);
            self.next_var += 1;
            self.scope.push((t.clone(), false));
            let body = self.comm(size);
            self.scope.pop();
            return GlobalType::rec(t, body);
        }
        self.comm(size)
    }

    fn comm(&mut self, size: usize) -> GlobalType {
        let (p, q) = self.pair();
        let n = if self.rng.random_bool(0.6) { 1 } else { self.rng.random_range(2..=3) };
        let labels = self.labels(n);
        let saved: Vec<bool> = self.scope.iter().map(|(_, g)| *g).collect();
        for entry in &mut self.scope {
            entry.1 = true;
        }
        let rest = size - 1;
        let arms = if self.shared_tails && n > 1 {
            let tail = self.node(rest / 2);
            labels
                .into_iter()
                .map(|l| {
                    // Each arm may tell a third role which way the choice went.
                    let cont = if self.rng.random_bool(0.5) {
                        tail.clone()
                    } else {
                        let r = self.third(&p, &q);
                        let k = MsgLabel::new(l.name.clone());
                        GlobalType::comm(q.clone(), r, vec![Arm::new(k, tail.clone())])
                    };
                    Arm::new(l, cont)
                })
                .collect()
        } else {
            labels.into_iter().map(|l| Arm::new(l, self.node(rest / n.max(1)))).collect()
        };
        for (entry, g) in self.scope.iter_mut().zip(saved) {
            entry.1 = g;
        }
        GlobalType::comm(p, q, arms)
    }

    fn third(&mut self, p: &Role, q: &Role) -> Role {
        loop {
            let r = self.role();
            if &r != p && &r != q {
                return r;
            }
        }
    }
}
