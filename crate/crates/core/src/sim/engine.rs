use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{Event, TraceEvent};
use crate::model::{StageKind, StageRef, StaticModel};
use crate::sim::kernel::{fire, Firing, Kernel, KernelState, Payload};
use crate::sim::store::{Record, Store};

pub const DEFAULT_MAX_STEPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("token stuck at {0}: no kernel and no outgoing flow")]
    Stuck(String),
    #[error("kernel arity at {stage}: {message}")]
    KernelArity { stage: String, message: String },
    #[error("step budget of {0} exceeded")]
    NonTermination(usize),
    #[error("unknown kernel {name} at {stage}")]
    UnknownKernel { stage: String, name: String },
    #[error("no entry stage: {0}")]
    NoEntry(String),
    #[error("unknown relation {0}")]
    UnknownRelation(String),
    #[error("duplicate key {key} in {relation}")]
    DuplicateKey { relation: String, key: String },
    #[error("unknown partition {value} of {relation}")]
    UnknownPartition { relation: String, value: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub i: usize,
    pub stage: String,
    pub outcome: String,
    pub token: String,
    /// Guard of the trigger that fired this stage, if any.
    #[serde(skip)]
    pub via: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub steps: Vec<Step>,
    pub events: Vec<TraceEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Trace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes") + "\n"
    }

    pub fn event_names(&self) -> Vec<&str> {
        self.events.iter().map(|e| e.event.as_str()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub entry: Option<StageRef>,
    pub max_steps: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { entry: None, max_steps: DEFAULT_MAX_STEPS }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    pub store: Store,
    pub trace: Trace,
}

/// A failed run keeps the trace up to the failure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{error}")]
pub struct RunFailure {
    pub error: RunError,
    pub trace: Trace,
}

/// Maps steps to the first declared event whose region holds the stage,
/// skipping steps outside every region and collapsing repeats.
pub fn project(model: &StaticModel, events: &[Event], steps: &[Step]) -> Vec<TraceEvent> {
    let regions: Vec<BTreeSet<String>> = events
        .iter()
        .map(|e| e.stages(model).into_iter().map(|s| model.stage_path(s)).collect())
        .collect();
    let mut out: Vec<TraceEvent> = Vec::new();
    for s in steps {
        let Some(i) = regions.iter().position(|r| r.contains(&s.stage)) else { continue };
        if out.last().is_some_and(|l| l.event == events[i].name) {
            continue;
        }
        out.push(TraceEvent { event: events[i].name.clone(), guard: s.via.clone() });
    }
    out
}

/// The request enters at the unique transfer-in stage that no flow feeds.
pub fn entry_stage(model: &StaticModel) -> Result<StageRef, RunError> {
    let fed: BTreeSet<StageRef> = model.flows.iter().map(|f| f.to).collect();
    let cands: Vec<StageRef> = model
        .stage_refs()
        .into_iter()
        .filter(|s| s.stage == StageKind::TransferIn && !fed.contains(s))
        .collect();
    match cands.as_slice() {
        [one] => Ok(*one),
        [] => Err(RunError::NoEntry("no unfed transfer_in stage".into())),
        many => Err(RunError::NoEntry(format!(
            "{} candidate transfer_in stages: {}",
            many.len(),
            many.iter().map(|s| model.stage_path(*s)).collect::<Vec<_>>().join(", ")
        ))),
    }
}

enum Activation {
    Arrive(StageRef, Payload),
    Pulse(StageRef, Option<String>),
}

struct Engine<'m> {
    model: &'m StaticModel,
    kernels: BTreeMap<StageRef, Kernel>,
    gated: BTreeSet<StageRef>,
    queue: BTreeMap<u64, Activation>,
    next_seq: u64,
    inbox: BTreeMap<StageRef, Vec<Payload>>,
    state: BTreeMap<StageRef, KernelState>,
    store: Store,
    trace: Trace,
}

impl<'m> Engine<'m> {
    fn seq(&mut self) -> u64 {
        self.next_seq += 1;
        self.next_seq
    }

    fn log(&mut self, at: StageRef, outcome: Option<&str>, token: String, via: Option<String>) {
        let i = self.trace.steps.len();
        self.trace.steps.push(Step {
            i,
            stage: self.model.stage_path(at),
            outcome: outcome.unwrap_or("-").to_string(),
            token,
            via,
        });
    }

    fn successors(&self, at: StageRef) -> Vec<StageRef> {
        self.model.flows.iter().filter(|f| f.from == at).map(|f| f.to).collect()
    }

    /// Sends tokens along every outgoing flow. When `keep` is given the
    /// first copy continues under that sequence number.
    fn forward(&mut self, at: StageRef, tokens: Vec<Payload>, mut keep: Option<u64>) {
        let succ = self.successors(at);
        for t in tokens {
            for &to in &succ {
                let s = keep.take().unwrap_or_else(|| self.seq());
                self.queue.insert(s, Activation::Arrive(to, t.clone()));
            }
        }
    }

    fn dispatch(&mut self, at: StageRef, outcome: Option<&str>) {
        let out: Vec<_> = self.model.triggers.iter().filter(|t| t.from == at).collect();
        let chosen = outcome
            .and_then(|o| out.iter().find(|t| t.guard.as_deref() == Some(o)))
            .or_else(|| out.iter().find(|t| t.guard.is_none()));
        if let Some(t) = chosen {
            let (to, guard) = (t.to, t.guard.clone());
            let s = self.seq();
            self.queue.insert(s, Activation::Pulse(to, guard));
        }
    }

    fn activate(&mut self, at: StageRef, seq: u64, summary: String, via: Option<String>) -> Result<bool, RunError> {
        let path = self.model.stage_path(at);
        let Some(kernel) = self.kernels.get(&at).cloned() else {
            let tokens = self.inbox.remove(&at).unwrap_or_default();
            self.log(at, None, summary, via);
            if !tokens.is_empty() && self.successors(at).is_empty() && at.stage != StageKind::Create {
                return Err(RunError::Stuck(path));
            }
            self.forward(at, tokens, Some(seq));
            self.dispatch(at, None);
            return Ok(true);
        };
        let mut inbox = self.inbox.remove(&at).unwrap_or_default();
        let st = self.state.entry(at).or_default();
        let firing = fire(&kernel, &mut inbox, st, &mut self.store, &path)?;
        if !inbox.is_empty() {
            self.inbox.insert(at, inbox);
        }
        match firing {
            Firing::Wait => Ok(true),
            Firing::Fired { outcome, outputs, error } => {
                self.log(at, outcome.as_deref(), summary, via);
                if let Some(code) = error {
                    self.trace.error = Some(code);
                    return Ok(false);
                }
                self.forward(at, outputs, None);
                self.dispatch(at, outcome.as_deref());
                Ok(true)
            }
        }
    }

    fn step(&mut self) -> Result<bool, RunError> {
        let Some((seq, act)) = self.queue.pop_first() else { return Ok(false) };
        match act {
            Activation::Arrive(at, p) => {
                let summary = p.to_string();
                self.inbox.entry(at).or_default().push(p);
                if self.gated.contains(&at) {
                    return Ok(true);
                }
                self.activate(at, seq, summary, None)
            }
            Activation::Pulse(at, guard) => {
                let held = self.inbox.get(&at).map(Vec::as_slice).unwrap_or_default();
                let summary = if held.is_empty() {
                    "pulse".to_string()
                } else {
                    held.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
                };
                self.activate(at, seq, summary, guard)
            }
        }
    }
}

/// Executes `model` on a copy of `store`, injecting `request` at the entry
/// stage. Stages targeted by a trigger hold arriving tokens until pulsed;
/// all others fire on arrival. The pending activation with the lowest
/// sequence number goes next, and a token keeps its number while it moves,
/// so execution is depth-first and fully deterministic.
pub fn run(
    model: &StaticModel,
    store: &Store,
    request: &Record,
    events: &[Event],
    cfg: &RunConfig,
) -> Result<Run, RunFailure> {
    let fail = |error, trace| RunFailure { error, trace };
    let mut kernels = BTreeMap::new();
    for s in model.stage_refs() {
        if let Some(spec) = model.stage(s).and_then(|st| st.kernel.as_ref()) {
            let k = Kernel::from_spec(spec, &model.stage_path(s)).map_err(|e| fail(e, Trace::default()))?;
            kernels.insert(s, k);
        }
    }
    let entry = match cfg.entry {
        Some(e) => e,
        None => entry_stage(model).map_err(|e| fail(e, Trace::default()))?,
    };
    let mut eng = Engine {
        model,
        kernels,
        gated: model.triggers.iter().map(|t| t.to).collect(),
        queue: BTreeMap::new(),
        next_seq: 0,
        inbox: BTreeMap::new(),
        state: BTreeMap::new(),
        store: store.clone(),
        trace: Trace::default(),
    };
    eng.queue.insert(0, Activation::Arrive(entry, Payload::Request(request.clone())));
    let mut budget = cfg.max_steps;
    loop {
        if budget == 0 {
            let mut trace = eng.trace;
            trace.events = project(model, events, &trace.steps);
            return Err(fail(RunError::NonTermination(cfg.max_steps), trace));
        }
        budget -= 1;
        match eng.step() {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => {
                let mut trace = eng.trace;
                trace.events = project(model, events, &trace.steps);
                return Err(fail(e, trace));
            }
        }
    }
    let mut trace = eng.trace;
    trace.events = project(model, events, &trace.steps);
    Ok(Run { store: eng.store, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_tm;
    use crate::events::resolve_events;
    use crate::sim::store::record;

    fn go(text: &str, store: &Store, req: &Record) -> Result<Run, RunFailure> {
        let p = parse_tm(text).unwrap();
        let (ev, _) = resolve_events(&p.model, &p.events);
        run(&p.model, store, req, &ev, &RunConfig::default())
    }

    #[test]
    fn pipeline_forwards_and_rests() {
        let r = go(
            "thimac A { transfer in; receive; release; transfer out; }
             thimac B { transfer in; receive; process kernel=extract(\"x\"); }
             thimac C { create; }
             flow A.transfer_in -> A.receive; flow A.receive -> A.release;
             flow A.release -> A.transfer_out; flow A.transfer_out -> B.transfer_in;
             flow B.transfer_in -> B.receive; flow B.receive -> B.process;
             trigger B.process -> C.create;
             event E1 { region = [A]; } event E2 { region = [B]; } event E3 { region = [C]; }",
            &Store::default(),
            &record(&[("x", "1")]),
        )
        .unwrap();
        let stages: Vec<&str> = r.trace.steps.iter().map(|s| s.stage.as_str()).collect();
        assert_eq!(
            stages,
            vec![
                "A.transfer_in", "A.receive", "A.release", "A.transfer_out",
                "B.transfer_in", "B.receive", "B.process", "C.create",
            ]
        );
        assert_eq!(r.trace.event_names(), vec!["E1", "E2", "E3"]);
        assert_eq!(r.trace.steps[6].outcome, "-");
    }

    #[test]
    fn stuck_and_budget() {
        let e = go(
            "thimac A { transfer in; receive; }  flow A.transfer_in -> A.receive;",
            &Store::default(),
            &Record::new(),
        )
        .unwrap_err();
        assert_eq!(e.error, RunError::Stuck("A.receive".into()));
        assert_eq!(e.trace.steps.len(), 2);

        let p = parse_tm(
            "thimac A { transfer in; receive; process kernel=construct(); } thimac B { process; } thimac C { process; }
             flow A.transfer_in -> A.receive; flow A.receive -> A.process;
             trigger A.process -> B.process; trigger B.process -> C.process; trigger C.process -> B.process;",
        )
        .unwrap();
        let cfg = RunConfig { entry: None, max_steps: 50 };
        let e = run(&p.model, &Store::default(), &Record::new(), &[], &cfg).unwrap_err();
        assert_eq!(e.error, RunError::NonTermination(50));
    }

    #[test]
    fn entry_must_be_unique() {
        let p = parse_tm("thimac A { transfer in; } thimac B { transfer in; }").unwrap();
        assert!(matches!(entry_stage(&p.model), Err(RunError::NoEntry(_))));
        let e = run(&p.model, &Store::default(), &Record::new(), &[], &RunConfig::default()).unwrap_err();
        assert!(matches!(e.error, RunError::NoEntry(_)));
    }

    const GUARDED: &str = "
        thimac A { transfer in; receive; release; transfer out; }
        thimac P { transfer in; receive; process kernel=extract(\"k\"); release; transfer out; }
        thimac Q { transfer in; receive; process kernel=construct(\"k\"); release; transfer out; }
        thimac R { transfer in; receive; process kernel=compare_eq(\"k\"); }
        thimac Y { process; } thimac N { process; } thimac Any { process; }
        flow A.transfer_in -> A.receive; flow A.receive -> A.release; flow A.release -> A.transfer_out;
        flow A.transfer_out -> P.transfer_in; flow A.transfer_out -> Q.transfer_in;
        flow P.transfer_in -> P.receive; flow P.receive -> P.process; flow P.process -> P.release;
        flow P.release -> P.transfer_out; flow P.transfer_out -> R.transfer_in;
        flow Q.transfer_in -> Q.receive; flow Q.receive -> Q.process; flow Q.process -> Q.release;
        flow Q.release -> Q.transfer_out; flow Q.transfer_out -> R.transfer_in;
        flow R.transfer_in -> R.receive; flow R.receive -> R.process;
        trigger R.process -> Y.process guard=\"equal\";
        trigger R.process -> Any.process;
        trigger R.process -> N.process guard=\"not-equal\";
        event Eq { region = [Y]; } event Ne { region = [N]; } event Fallback { region = [Any]; }
    ";

    #[test]
    fn guard_dispatch_picks_one_trigger() {
        let r = go(GUARDED, &Store::default(), &record(&[("k", "1")])).unwrap();
        assert_eq!(r.trace.events, vec![TraceEvent::new("Eq", Some("equal"))]);
        let fallback = GUARDED.replace("trigger R.process -> Y.process guard=\"equal\";", "");
        let r = go(&fallback, &Store::default(), &record(&[("k", "1")])).unwrap();
        assert_eq!(r.trace.events, vec![TraceEvent::new("Fallback", None)]);
        let compare = r.trace.steps.iter().find(|s| s.stage == "R.process").unwrap();
        assert_eq!(compare.outcome, "equal");
    }

    #[test]
    fn runs_are_repeatable() {
        let a = go(GUARDED, &Store::default(), &record(&[("k", "1")])).unwrap();
        let b = go(GUARDED, &Store::default(), &record(&[("k", "1")])).unwrap();
        assert_eq!(a.trace.to_json(), b.trace.to_json());
    }
}
