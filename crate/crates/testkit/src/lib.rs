//! Seeded generators of small policies, platforms and worker loads.

use aapp_core::analysis::classify;
use aapp_core::encoder::encode;
use aapp_core::parser::{AffinityOpt, Followup, RawBlock, ScriptAst, TagDecl};
use aapp_core::{
    Block, Configuration, EncodedPolicy, FunctionId, InvalidateOpt, Polarity, Registry, Strategy,
    Tag, WorkerId, WorkerSet,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn wid(i: usize) -> WorkerId {
    WorkerId::new(format!("w{i}")).expect("identifier")
}

pub fn fid(i: usize) -> FunctionId {
    FunctionId::new(format!("f{i}")).expect("identifier")
}

pub fn tid(i: usize) -> Tag {
    Tag::new(format!("t{i}")).expect("identifier")
}

/// Size limits for generated instances.
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub workers: usize,
    pub functions: usize,
    pub tags: usize,
    pub max_capacity: u64,
    pub max_occupancy: u64,
    pub blocks_per_tag: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            workers: 3,
            functions: 4,
            tags: 3,
            max_capacity: 8,
            max_occupancy: 4,
            blocks_per_tag: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub ast: ScriptAst,
    pub policy: EncodedPolicy,
    pub reg: Registry,
    pub conf: Configuration,
}

impl Instance {
    pub fn workers(&self) -> Vec<WorkerId> {
        self.conf.worker_ids().cloned().collect()
    }

    pub fn functions(&self) -> Vec<FunctionId> {
        self.reg.functions().cloned().collect()
    }
}

pub struct Generator {
    rng: ChaCha8Rng,
    limits: Limits,
}

impl Generator {
    pub fn new(seed: u64, limits: Limits) -> Self {
        Generator {
            rng: ChaCha8Rng::seed_from_u64(seed),
            limits,
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn invalidate(&mut self) -> Vec<InvalidateOpt> {
        let mut out = Vec::new();
        if self.rng.gen_bool(0.5) {
            out.push(InvalidateOpt::CapacityUsed(self.rng.gen_range(1..=100)));
        }
        if self.rng.gen_bool(0.4) {
            out.push(InvalidateOpt::MaxConcurrent(self.rng.gen_range(1..=4)));
        }
        out
    }

    fn raw_block(&mut self, nw: usize, nt: usize, affine: bool, anti: bool) -> RawBlock {
        let workers = if self.rng.gen_bool(0.4) {
            WorkerSet::Star
        } else {
            let mut ws: Vec<usize> = (0..nw).collect();
            ws.shuffle(&mut self.rng);
            ws.truncate(self.rng.gen_range(1..=nw));
            WorkerSet::List(ws.into_iter().map(wid).collect())
        };
        let strategy = match self.rng.gen_range(0..3) {
            0 => None,
            1 => Some(Strategy::Any),
            _ => Some(Strategy::BestFirst),
        };
        let invalidate = self.invalidate();
        let mut affinity = Vec::new();
        let mut tags: Vec<usize> = (0..nt).collect();
        tags.shuffle(&mut self.rng);
        for t in tags.into_iter().take(self.rng.gen_range(0..=2)) {
            match (affine, anti) {
                (true, true) if self.rng.gen_bool(0.5) => affinity.push(AffinityOpt::Affine(tid(t))),
                (true, false) => affinity.push(AffinityOpt::Affine(tid(t))),
                (_, true) => affinity.push(AffinityOpt::AntiAffine(tid(t))),
                _ => {}
            }
        }
        RawBlock {
            workers,
            strategy,
            invalidate: (!invalidate.is_empty()).then_some(invalidate),
            affinity: (!affinity.is_empty()).then_some(affinity),
        }
    }

    fn draw(&mut self, affine: bool, anti: bool) -> Instance {
        let l = self.limits;
        let nw = self.rng.gen_range(1..=l.workers);
        let nf = self.rng.gen_range(1..=l.functions);
        let nt = self.rng.gen_range(1..=l.tags);
        let tags = (0..nt)
            .map(|t| {
                let n = self.rng.gen_range(1..=l.blocks_per_tag);
                TagDecl {
                    tag: tid(t),
                    blocks: (0..n).map(|_| self.raw_block(nw, nt, affine, anti)).collect(),
                    followup: self.rng.gen_bool(0.5).then_some(Followup::Fail),
                }
            })
            .collect();
        let ast = ScriptAst { tags };
        let policy = encode(&ast);
        let reg = Registry::from_entries((0..nf).map(|i| {
            (fid(i), self.rng.gen_range(1..=l.max_occupancy), tid(self.rng.gen_range(0..nt)))
        }))
        .expect("distinct functions");
        let mut conf = Configuration::with_workers(
            (0..nw).map(|i| (wid(i), self.rng.gen_range(1..=l.max_capacity))),
        )
        .expect("distinct workers");
        for _ in 0..self.rng.gen_range(0..=nw * 2) {
            let (f, w) = (fid(self.rng.gen_range(0..nf)), wid(self.rng.gen_range(0..nw)));
            if let Ok(next) = conf.apply_start(&f, &w, &reg) {
                conf = next;
            }
        }
        Instance {
            ast,
            policy,
            reg,
            conf,
        }
    }

    /// An instance whose policy classifies as `polarity`.
    pub fn instance(&mut self, polarity: Polarity) -> Instance {
        let (affine, anti) = match polarity {
            Polarity::PlainApp => (false, false),
            Polarity::NegOnly => (false, true),
            Polarity::PosOnly => (true, false),
            Polarity::Full => (true, true),
        };
        loop {
            let inst = self.draw(affine, anti);
            if classify(&inst.policy) == polarity {
                return inst;
            }
        }
    }

    /// A block without affine tags, drawn over `nt` tags.
    pub fn affine_free_block(&mut self, nw: usize, nt: usize) -> Block {
        let raw = self.raw_block(nw, nt, false, true);
        let policy = encode(&ScriptAst {
            tags: vec![TagDecl {
                tag: tid(0),
                blocks: vec![raw],
                followup: Some(Followup::Fail),
            }],
        });
        policy.blocks(&tid(0)).expect("tag")[0].clone()
    }

    /// Random load on `w`, built by repeated starts that fit.
    pub fn load(&mut self, conf: &Configuration, reg: &Registry, w: &WorkerId) -> Configuration {
        let fs: Vec<FunctionId> = reg.functions().cloned().collect();
        let mut conf = conf.clone();
        for _ in 0..self.rng.gen_range(0..=6) {
            let f = fs.choose(&mut self.rng).expect("functions");
            if let Ok(next) = conf.apply_start(f, w, reg) {
                conf = next;
            }
        }
        conf
    }
}

/// Every configuration whose load on `w` is a sub-multiset of the load in
/// `conf`, other workers unchanged.
pub fn sub_loads(conf: &Configuration, reg: &Registry, w: &WorkerId) -> Vec<Configuration> {
    let state = conf.state(w).expect("worker");
    let counts: Vec<(FunctionId, u32)> = state.allocations().map(|(f, n)| (f.clone(), n)).collect();
    let mut out = vec![conf.clone()];
    for (f, n) in counts {
        let mut next = Vec::new();
        for c in &out {
            let mut cur = c.clone();
            next.push(cur.clone());
            for _ in 0..n {
                cur = cur.apply_done(&f, w, reg).expect("allocated");
                next.push(cur.clone());
            }
        }
        out = next;
    }
    out
}
