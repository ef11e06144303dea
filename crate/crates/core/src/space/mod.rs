//! Design-space model: tuning parameters with conditional option lists,
//! configurations, validity and stepping.
//!
//! The space is a grid in which infeasible points are marked invalid rather
//! than removed. A configuration is valid when every parameter's value is a
//! member of its option list evaluated under the other parameters' values.

pub mod dsl;
pub mod value;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use dsl::{Comprehension, Expr, PragmaKind, SyntaxError};
pub use value::{OptionValue, PipelineMode};

/// First line of every serialized design-space file.
pub const DESIGN_SPACE_HEADER: &str = "// autodse-design-space v1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("duplicate parameter `{name}` at {pos}")]
    DuplicateParam { name: String, pos: dsl::Pos },
    #[error("parameter `{param}` references unknown identifier `{name}` at {pos}")]
    UnknownIdentifier {
        param: String,
        name: String,
        pos: dsl::Pos,
    },
    #[error("cyclic dependency between parameters: {}", .cycle.join(" -> "))]
    CyclicDependency { cycle: Vec<String> },
    #[error("parameter `{param}`: {message}")]
    InvalidParam { param: String, message: String },
    #[error("cannot evaluate options of `{param}`: {message}")]
    Eval { param: String, message: String },
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("value `{value}` of `{param}` is not among its current options")]
    InvalidConfig { param: String, value: OptionValue },
    #[error("design space has more than {cap} valid points")]
    SpaceTooLarge { cap: u64 },
    #[error("parameter `{param}` is attached to unknown loop `{scope}`")]
    UnknownLoop { param: String, scope: String },
}

/// A named tuning parameter: one pragma slot on one loop.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: PragmaKind,
    /// Loop the pragma is attached to.
    pub scope: String,
    pub options: Comprehension,
    pub default: OptionValue,
    /// Parameters referenced by the option condition.
    pub deps: BTreeSet<String>,
    /// The unconditioned option list (head applied to every item).
    pub grid: Vec<OptionValue>,
}

impl ParamSpec {
    fn new(raw: dsl::RawParam) -> Result<Self, SpaceError> {
        let invalid = |message: String| SpaceError::InvalidParam {
            param: raw.name.clone(),
            message,
        };
        let mut grid = Vec::with_capacity(raw.options.items.len());
        for item in &raw.options.items {
            let v = eval_head(&raw.options, *item).map_err(&invalid)?;
            if !grid.contains(&v) {
                grid.push(v);
            }
        }
        for v in &grid {
            match (raw.kind, v) {
                (PragmaKind::Pipeline, OptionValue::Mode(_)) => {}
                (PragmaKind::Parallel | PragmaKind::Tiling, OptionValue::Factor(f)) if *f >= 1 => {}
                (kind, v) => return Err(invalid(format!("`{v}` is not a valid {kind} option"))),
            }
        }
        if !grid.contains(&raw.default) {
            return Err(invalid(format!(
                "default `{}` is not among the options",
                raw.default
            )));
        }
        let mut deps = BTreeSet::new();
        if let Some(c) = &raw.options.cond {
            c.names(&mut deps);
        }
        deps.remove(&raw.options.var);
        Ok(ParamSpec {
            name: raw.name,
            kind: raw.kind,
            scope: raw.scope,
            options: raw.options,
            default: raw.default,
            deps,
            grid,
        })
    }

    /// Whether the unconditioned option list contains the given pipeline mode.
    pub fn offers(&self, mode: PipelineMode) -> bool {
        self.grid.contains(&OptionValue::Mode(mode))
    }

    fn render(&self, out: &mut String) {
        let _ = writeln!(
            out,
            "#pragma ACCEL {} {}=auto{{ options: {}={}; default: {} }}",
            self.kind,
            self.kind.attribute(),
            self.name,
            self.options,
            self.default
        );
    }
}

fn eval_head(c: &Comprehension, item: OptionValue) -> Result<OptionValue, String> {
    let v = c
        .head
        .eval(&|n| if n == c.var { Some(item) } else { None })?;
    match v {
        dsl::Val::Int(i) => Ok(OptionValue::Factor(i)),
        dsl::Val::Mode(m) => Ok(OptionValue::Mode(m)),
        dsl::Val::Bool(_) => Err("option expression evaluates to a boolean".to_string()),
    }
}

/// Static description of the kernel's loop nest, as far as the design
/// space needs it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopInfo {
    pub id: String,
    pub parent: Option<String>,
    pub trip_count: u64,
    pub innermost: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LoopHierarchy {
    /// Loops in pre-order.
    pub loops: Vec<LoopInfo>,
}

impl LoopHierarchy {
    pub fn get(&self, id: &str) -> Option<&LoopInfo> {
        self.loops.iter().find(|l| l.id == id)
    }

    /// Ancestors of `id`, nearest first.
    pub fn ancestors(&self, id: &str) -> Vec<&LoopInfo> {
        let mut out = Vec::new();
        let mut cur = self.get(id).and_then(|l| l.parent.clone());
        while let Some(p) = cur {
            match self.get(&p) {
                Some(l) => {
                    cur = l.parent.clone();
                    out.push(l);
                }
                None => break,
            }
        }
        out
    }
}

/// The set of tuning parameters and their evaluation order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "SpaceRepr", into = "SpaceRepr")]
pub struct DesignSpace {
    params: Vec<ParamSpec>,
    index: HashMap<String, usize>,
    eval_order: Vec<usize>,
    loops: Option<LoopHierarchy>,
}

#[derive(Serialize, Deserialize)]
struct SpaceRepr {
    params: Vec<ParamSpec>,
    eval_order: Vec<usize>,
    loops: Option<LoopHierarchy>,
}

impl From<SpaceRepr> for DesignSpace {
    fn from(r: SpaceRepr) -> Self {
        let index = r
            .params
            .iter()
            .enumerate()
            .map(|(i, p)| (p.name.clone(), i))
            .collect();
        DesignSpace {
            params: r.params,
            index,
            eval_order: r.eval_order,
            loops: r.loops,
        }
    }
}

impl From<DesignSpace> for SpaceRepr {
    fn from(d: DesignSpace) -> Self {
        SpaceRepr {
            params: d.params,
            eval_order: d.eval_order,
            loops: d.loops,
        }
    }
}

impl PartialEq for DesignSpace {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.eval_order == other.eval_order
    }
}

impl DesignSpace {
    /// Parses a design-space file.
    pub fn parse(text: &str) -> Result<Self, SpaceError> {
        let raws = dsl::parse_blocks(text)?;
        let mut seen: HashMap<String, dsl::Pos> = HashMap::new();
        for r in &raws {
            if seen.insert(r.name.clone(), r.pos).is_some() {
                return Err(SpaceError::DuplicateParam {
                    name: r.name.clone(),
                    pos: r.pos,
                });
            }
        }
        for r in &raws {
            for (name, pos) in &r.name_refs {
                if *name != r.options.var && !seen.contains_key(name) {
                    return Err(SpaceError::UnknownIdentifier {
                        param: r.name.clone(),
                        name: name.clone(),
                        pos: *pos,
                    });
                }
            }
        }
        let params = raws
            .into_iter()
            .map(ParamSpec::new)
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_params(params)
    }

    /// Builds a space from already-constructed parameters, computing the
    /// evaluation order.
    pub fn from_params(params: Vec<ParamSpec>) -> Result<Self, SpaceError> {
        let mut index = HashMap::new();
        for (i, p) in params.iter().enumerate() {
            if index.insert(p.name.clone(), i).is_some() {
                return Err(SpaceError::DuplicateParam {
                    name: p.name.clone(),
                    pos: dsl::Pos::default(),
                });
            }
        }
        for p in &params {
            for d in &p.deps {
                if !index.contains_key(d) {
                    return Err(SpaceError::UnknownIdentifier {
                        param: p.name.clone(),
                        name: d.clone(),
                        pos: dsl::Pos::default(),
                    });
                }
            }
        }
        let eval_order = topo_order(&params, &index)?;
        Ok(DesignSpace {
            params,
            index,
            eval_order,
            loops: None,
        })
    }

    /// Attaches the kernel loop hierarchy; every parameter scope must name a loop in it.
    pub fn with_loops(mut self, loops: LoopHierarchy) -> Result<Self, SpaceError> {
        for p in &self.params {
            if loops.get(&p.scope).is_none() {
                return Err(SpaceError::UnknownLoop {
                    param: p.name.clone(),
                    scope: p.scope.clone(),
                });
            }
        }
        self.loops = Some(loops);
        Ok(self)
    }

    pub fn loops(&self) -> Option<&LoopHierarchy> {
        self.loops.as_ref()
    }

    /// Number of parameters (K).
    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Parameters in declaration order.
    pub fn params(&self) -> &[ParamSpec] {
        &self.params
    }

    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.index.get(name).map(|&i| &self.params[i])
    }

    fn require(&self, name: &str) -> Result<&ParamSpec, SpaceError> {
        self.param(name)
            .ok_or_else(|| SpaceError::UnknownParam(name.to_string()))
    }

    /// Parameters in dependency order.
    pub fn eval_order(&self) -> impl Iterator<Item = &ParamSpec> + '_ {
        self.eval_order.iter().map(move |&i| &self.params[i])
    }

    /// The configuration with every parameter at its default.
    pub fn default_config(&self) -> Config {
        Config(
            self.params
                .iter()
                .map(|p| (p.name.clone(), p.default))
                .collect(),
        )
    }

    /// Evaluates the option list of `name` under `ctx`.
    ///
    /// Options whose condition is false are dropped; the default is
    /// re-inserted at the front when filtered out, so the list is never
    /// empty and the off state is always reachable.
    pub fn eval_options(&self, name: &str, ctx: &Config) -> Result<Vec<OptionValue>, SpaceError> {
        let p = self.require(name)?;
        let c = &p.options;
        let mut out = Vec::with_capacity(c.items.len());
        for item in &c.items {
            let keep = match &c.cond {
                None => true,
                Some(cond) => {
                    let v = cond
                        .eval(&|n| if n == c.var { Some(*item) } else { ctx.get(n) })
                        .map_err(|message| SpaceError::Eval {
                            param: p.name.clone(),
                            message,
                        })?;
                    match v {
                        dsl::Val::Bool(b) => b,
                        other => {
                            return Err(SpaceError::Eval {
                                param: p.name.clone(),
                                message: format!("condition evaluates to {other:?}, not a boolean"),
                            })
                        }
                    }
                }
            };
            if keep {
                let v = eval_head(c, *item).map_err(|message| SpaceError::Eval {
                    param: p.name.clone(),
                    message,
                })?;
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        if !out.contains(&p.default) {
            out.insert(0, p.default);
        }
        Ok(out)
    }

    /// The option after `cfg[name]` in its current option list.
    pub fn next_value(&self, cfg: &Config, name: &str) -> Result<Step, SpaceError> {
        let opts = self.eval_options(name, cfg)?;
        let cur = cfg
            .get(name)
            .ok_or_else(|| SpaceError::UnknownParam(name.to_string()))?;
        let at = opts
            .iter()
            .position(|v| *v == cur)
            .ok_or_else(|| SpaceError::InvalidConfig {
                param: name.to_string(),
                value: cur,
            })?;
        Ok(match opts.get(at + 1) {
            Some(v) => Step::Next(*v),
            None => Step::Exhausted,
        })
    }

    /// Checks every parameter's value against its conditional option list.
    pub fn validate(&self, cfg: &Config) -> Validity {
        let mut violations = Vec::new();
        for p in self.eval_order() {
            let Some(v) = cfg.get(&p.name) else {
                violations.push(Violation {
                    param: p.name.clone(),
                    reason: "no value assigned".to_string(),
                });
                continue;
            };
            match self.eval_options(&p.name, cfg) {
                Ok(opts) if opts.contains(&v) => {}
                Ok(opts) => violations.push(Violation {
                    param: p.name.clone(),
                    reason: format!(
                        "`{v}` not in [{}]",
                        opts.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(",")
                    ),
                }),
                Err(e) => violations.push(Violation {
                    param: p.name.clone(),
                    reason: e.to_string(),
                }),
            }
        }
        for name in cfg.0.keys() {
            if self.param(name).is_none() {
                violations.push(Violation {
                    param: name.clone(),
                    reason: "not a parameter of this design space".to_string(),
                });
            }
        }
        if violations.is_empty() {
            Validity::Valid
        } else {
            Validity::Invalid(violations)
        }
    }

    pub fn is_valid(&self, cfg: &Config) -> bool {
        self.validate(cfg).is_valid()
    }

    /// Sets `name` to `value` and resets any parameter whose option list no
    /// longer contains its value to the default, in dependency order.
    pub fn manipulate(
        &self,
        cfg: &Config,
        name: &str,
        value: OptionValue,
    ) -> Result<Config, SpaceError> {
        self.require(name)?;
        let mut out = cfg.clone();
        out.set(name, value);
        self.repair(&mut out, Some(name))?;
        Ok(out)
    }

    /// Resets invalid values to defaults in dependency order, leaving `pinned` alone.
    pub fn repair(&self, cfg: &mut Config, pinned: Option<&str>) -> Result<(), SpaceError> {
        for p in self.eval_order() {
            if Some(p.name.as_str()) == pinned {
                continue;
            }
            let opts = self.eval_options(&p.name, cfg)?;
            match cfg.get(&p.name) {
                Some(v) if opts.contains(&v) => {}
                _ => cfg.set(&p.name, p.default),
            }
        }
        Ok(())
    }

    /// Lazily enumerates valid configurations in dependency-order
    /// lexicographic order, stopping after `limit`.
    pub fn enumerate_valid(&self, limit: u64) -> ValidConfigs<'_> {
        ValidConfigs::new(self, limit)
    }

    /// Every valid configuration, or `SpaceTooLarge` when there are more than `cap`.
    pub fn enumerate_all(&self, cap: u64) -> Result<Vec<Config>, SpaceError> {
        let mut out = Vec::new();
        for c in self.enumerate_valid(cap.saturating_add(1)) {
            out.push(c?);
            if out.len() as u64 > cap {
                return Err(SpaceError::SpaceTooLarge { cap });
            }
        }
        Ok(out)
    }

    /// Product of the unconditioned option-list lengths.
    pub fn grid_size(&self) -> u128 {
        self.params
            .iter()
            .fold(1u128, |acc, p| acc.saturating_mul(p.grid.len() as u128))
    }

    /// Draws a uniformly random point of the (unpruned) grid.
    pub fn sample_grid<R: Rng + ?Sized>(&self, rng: &mut R) -> Config {
        Config(
            self.params
                .iter()
                .map(|p| (p.name.clone(), p.grid[rng.gen_range(0..p.grid.len())]))
                .collect(),
        )
    }

    /// Returns a copy in which parameter `name` is limited to `allowed`
    /// (intersected with its items) and defaults to `default`.
    pub fn restrict(
        &self,
        name: &str,
        allowed: &[OptionValue],
        default: OptionValue,
    ) -> Result<Self, SpaceError> {
        let mut out = self.clone();
        let i = *self
            .index
            .get(name)
            .ok_or_else(|| SpaceError::UnknownParam(name.to_string()))?;
        let p = &mut out.params[i];
        let items: Vec<OptionValue> = p
            .options
            .items
            .iter()
            .copied()
            .filter(|v| allowed.contains(v))
            .collect();
        if items.is_empty() || !items.contains(&default) {
            return Err(SpaceError::InvalidParam {
                param: name.to_string(),
                message: "restriction leaves no options or drops the default".to_string(),
            });
        }
        p.grid.retain(|v| items.contains(v));
        p.options.items = items;
        p.default = default;
        Ok(out)
    }

    /// Serializes to the pragma file format, one block per parameter.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(DESIGN_SPACE_HEADER);
        out.push('\n');
        for p in &self.params {
            let _ = writeln!(out, "loop: {}", p.scope);
            p.render(&mut out);
        }
        out
    }

    /// Renders `cfg` as pinned pragmas (concrete values instead of
    /// `auto{...}`); the result parses back as a single-point space.
    pub fn pinned_text(&self, cfg: &Config) -> String {
        let mut out = String::new();
        out.push_str("// autodse-best-config v1\n");
        let mut last_scope: Option<&str> = None;
        for p in &self.params {
            if last_scope != Some(p.scope.as_str()) {
                let _ = writeln!(out, "loop: {}", p.scope);
                last_scope = Some(&p.scope);
            }
            let v = cfg.get(&p.name).unwrap_or(p.default);
            let _ = writeln!(
                out,
                "#pragma ACCEL {} {}={} name={}",
                p.kind,
                p.kind.attribute(),
                v,
                p.name
            );
        }
        out
    }
}

fn topo_order(params: &[ParamSpec], index: &HashMap<String, usize>) -> Result<Vec<usize>, SpaceError> {
    // 0 = unvisited, 1 = on stack, 2 = done; declaration order breaks ties
    let mut state = vec![0u8; params.len()];
    let mut order = Vec::with_capacity(params.len());
    let mut stack: Vec<usize> = Vec::new();

    fn visit(
        i: usize,
        params: &[ParamSpec],
        index: &HashMap<String, usize>,
        state: &mut [u8],
        stack: &mut Vec<usize>,
        order: &mut Vec<usize>,
    ) -> Result<(), SpaceError> {
        match state[i] {
            2 => return Ok(()),
            1 => {
                let from = stack.iter().position(|&s| s == i).unwrap_or(0);
                let mut cycle: Vec<String> =
                    stack[from..].iter().map(|&s| params[s].name.clone()).collect();
                cycle.push(params[i].name.clone());
                return Err(SpaceError::CyclicDependency { cycle });
            }
            _ => {}
        }
        state[i] = 1;
        stack.push(i);
        let mut deps: Vec<usize> = params[i].deps.iter().map(|d| index[d]).collect();
        deps.sort_unstable();
        for d in deps {
            visit(d, params, index, state, stack, order)?;
        }
        stack.pop();
        state[i] = 2;
        order.push(i);
        Ok(())
    }

    for i in 0..params.len() {
        visit(i, params, index, &mut state, &mut stack, &mut order)?;
    }
    Ok(order)
}

impl fmt::Display for DesignSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Result of [`DesignSpace::next_value`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Next(OptionValue),
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub param: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Validity {
    Valid,
    Invalid(Vec<Violation>),
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid)
    }

    pub fn violated_params(&self) -> Vec<&str> {
        match self {
            Validity::Valid => Vec::new(),
            Validity::Invalid(v) => v.iter().map(|v| v.param.as_str()).collect(),
        }
    }
}

/// A total assignment of one option per parameter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Config(pub BTreeMap<String, OptionValue>);

impl Config {
    pub fn get(&self, name: &str) -> Option<OptionValue> {
        self.0.get(name).copied()
    }

    pub fn set(&mut self, name: &str, value: OptionValue) {
        self.0.insert(name.to_string(), value);
    }

    pub fn with(mut self, name: &str, value: OptionValue) -> Self {
        self.set(name, value);
        self
    }

    /// Canonical text form: `name=value` pairs sorted by name.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                s.push(';');
            }
            let _ = write!(s, "{k}={v}");
        }
        s
    }

    /// SHA-256 of the canonical form.
    pub fn key(&self) -> ConfigKey {
        let digest = Sha256::digest(self.canonical().as_bytes());
        let mut hex = String::with_capacity(64);
        for b in digest {
            let _ = write!(hex, "{b:02x}");
        }
        ConfigKey(hex)
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        f.write_str(&self.canonical().replace(';', ", "))?;
        f.write_str("}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfigKey(pub String);

impl ConfigKey {
    pub fn short(&self) -> &str {
        &self.0[..12.min(self.0.len())]
    }
}

impl fmt::Display for ConfigKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Iterator over valid configurations; see [`DesignSpace::enumerate_valid`].
pub struct ValidConfigs<'a> {
    ds: &'a DesignSpace,
    order: Vec<usize>,
    /// Per depth: the option list and the current index into it.
    stack: Vec<(Vec<OptionValue>, usize)>,
    current: Config,
    remaining: u64,
    started: bool,
    done: bool,
}

impl<'a> ValidConfigs<'a> {
    fn new(ds: &'a DesignSpace, limit: u64) -> Self {
        ValidConfigs {
            ds,
            order: ds.eval_order.clone(),
            stack: Vec::new(),
            current: ds.default_config(),
            remaining: limit,
            started: false,
            done: limit == 0,
        }
    }

    /// Fills the stack down to full depth from the current prefix.
    fn descend(&mut self) -> Result<(), SpaceError> {
        while self.stack.len() < self.order.len() {
            let p = &self.ds.params[self.order[self.stack.len()]];
            let opts = self.ds.eval_options(&p.name, &self.current)?;
            self.current.set(&p.name, opts[0]);
            self.stack.push((opts, 0));
        }
        Ok(())
    }

    /// Moves to the next leaf; false when exhausted.
    fn advance(&mut self) -> Result<bool, SpaceError> {
        while let Some((opts, idx)) = self.stack.last_mut() {
            if *idx + 1 < opts.len() {
                *idx += 1;
                let v = opts[*idx];
                let depth = self.stack.len() - 1;
                let name = &self.ds.params[self.order[depth]].name;
                self.current.set(name, v);
                self.descend()?;
                return Ok(true);
            }
            self.stack.pop();
        }
        Ok(false)
    }
}

impl Iterator for ValidConfigs<'_> {
    type Item = Result<Config, SpaceError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let step = if self.started {
            self.advance()
        } else {
            self.started = true;
            self.descend().map(|_| true)
        };
        match step {
            Ok(true) => {
                self.remaining -= 1;
                if self.remaining == 0 {
                    self.done = true;
                }
                Some(Ok(self.current.clone()))
            }
            Ok(false) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const GATED: &str = "\
loop: j
#pragma ACCEL PIPELINE mode=auto{ options: P1=[x for x in [off,cg,fg]]; default: off }
#pragma ACCEL PARALLEL factor=auto{ options: P2=[x for x in [1,2] if P1!=cg]; default: 1 }
";

    fn cfg(pairs: &[(&str, OptionValue)]) -> Config {
        Config(pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }

    #[test]
    fn parses_listing_with_dependency() {
        let ds = DesignSpace::parse(
            "loop: j\n#pragma ACCEL PIPELINE mode=auto{ options: P1=[x for x in [off,cg,fg]]; default: off }\n\
             #pragma ACCEL PARALLEL factor=auto{ options: P2=[x for x in [1,2,4] if P1!=cg]; default: 1 }",
        )
        .unwrap();
        let p1 = ds.param("P1").unwrap();
        assert!(p1.deps.is_empty());
        assert_eq!(p1.grid.len(), 3);
        let p2 = ds.param("P2").unwrap();
        assert_eq!(p2.deps, BTreeSet::from(["P1".to_string()]));
        assert_eq!(p2.default, OptionValue::Factor(1));
        assert_eq!(p2.kind, PragmaKind::Parallel);
        assert_eq!(p2.scope, "j");
    }

    #[test]
    fn self_reference_is_a_cycle() {
        let err = DesignSpace::parse(
            "loop: j\n#pragma ACCEL PARALLEL factor=auto{ options: P2=[x for x in [1,2] if P2!=1]; default: 1 }",
        )
        .unwrap_err();
        assert_eq!(
            err,
            SpaceError::CyclicDependency {
                cycle: vec!["P2".into(), "P2".into()]
            }
        );
    }

    #[test]
    fn longer_cycle_is_named() {
        let err = DesignSpace::parse(
            "loop: j\n\
             #pragma ACCEL PARALLEL factor=auto{ options: A=[x for x in [1,2] if B==1]; default: 1 }\n\
             #pragma ACCEL TILING factor=auto{ options: B=[x for x in [1,2] if A==1]; default: 1 }",
        )
        .unwrap_err();
        match err {
            SpaceError::CyclicDependency { cycle } => assert_eq!(cycle, ["A", "B", "A"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_identifier_and_duplicates() {
        let err = DesignSpace::parse(
            "loop: j\n#pragma ACCEL PARALLEL factor=auto{ options: P2=[x for x in [1,2] if Q!=cg]; default: 1 }",
        )
        .unwrap_err();
        assert!(matches!(err, SpaceError::UnknownIdentifier { ref name, .. } if name == "Q"));

        let err = DesignSpace::parse(&format!(
            "{GATED}#pragma ACCEL PARALLEL factor=auto{{ options: P2=[x for x in [1]]; default: 1 }}"
        ))
        .unwrap_err();
        assert!(matches!(err, SpaceError::DuplicateParam { .. }));
    }

    #[test]
    fn bad_defaults_and_sorts_rejected() {
        assert!(matches!(
            DesignSpace::parse("loop: j\n#pragma ACCEL PARALLEL factor=auto{ options: P=[x for x in [2,4]]; default: 1 }"),
            Err(SpaceError::InvalidParam { .. })
        ));
        assert!(matches!(
            DesignSpace::parse("loop: j\n#pragma ACCEL PARALLEL factor=auto{ options: P=[x for x in [off,fg]]; default: off }"),
            Err(SpaceError::InvalidParam { .. })
        ));
        assert!(matches!(
            DesignSpace::parse("loop: j\n#pragma ACCEL TILING factor=auto{ options: P=[x for x in [0,1]]; default: 1 }"),
            Err(SpaceError::InvalidParam { .. })
        ));
    }

    #[test]
    fn options_under_context() {
        let ds = DesignSpace::parse(
            "loop: j\n#pragma ACCEL PIPELINE mode=auto{ options: P1=[x for x in [off,cg,fg]]; default: off }\n\
             #pragma ACCEL PARALLEL factor=auto{ options: P2=[x for x in [1,2,4,8,16,32,64] if P1!=cg]; default: 1 }",
        )
        .unwrap();
        let f = |v: &[i64]| v.iter().map(|&x| OptionValue::Factor(x)).collect::<Vec<_>>();
        assert_eq!(
            ds.eval_options("P2", &cfg(&[("P1", OptionValue::CG)])).unwrap(),
            f(&[1])
        );
        assert_eq!(
            ds.eval_options("P2", &cfg(&[("P1", OptionValue::FG)])).unwrap(),
            f(&[1, 2, 4, 8, 16, 32, 64])
        );
        assert_eq!(
            ds.eval_options("P1", &Config::default()).unwrap(),
            vec![OptionValue::OFF, OptionValue::CG, OptionValue::FG]
        );
    }

    #[test]
    fn missing_dependency_is_an_eval_error() {
        let ds = DesignSpace::parse(GATED).unwrap();
        assert!(matches!(
            ds.eval_options("P2", &Config::default()),
            Err(SpaceError::Eval { .. })
        ));
    }

    #[test]
    fn mode_int_comparison_is_eval_error() {
        let ds = DesignSpace::parse(
            "loop: j\n#pragma ACCEL PIPELINE mode=auto{ options: P1=[x for x in [off,cg]]; default: off }\n\
             #pragma ACCEL PARALLEL factor=auto{ options: P2=[x for x in [1,2] if P1!=1]; default: 1 }",
        )
        .unwrap();
        let err = ds.eval_options("P2", &ds.default_config()).unwrap_err();
        assert!(matches!(err, SpaceError::Eval { .. }));
    }

    #[test]
    fn next_value_walks_the_list() {
        let ds = DesignSpace::parse(
            "loop: j\n#pragma ACCEL PIPELINE mode=auto{ options: M=[x for x in [off,cg,fg]]; default: off }\n\
             #pragma ACCEL PARALLEL factor=auto{ options: F=[x for x in [1,2,4,8,16,32]]; default: 1 }",
        )
        .unwrap();
        let c = cfg(&[("M", OptionValue::OFF), ("F", OptionValue::Factor(4))]);
        assert_eq!(ds.next_value(&c, "F").unwrap(), Step::Next(OptionValue::Factor(8)));
        assert_eq!(ds.next_value(&c, "M").unwrap(), Step::Next(OptionValue::CG));
        let c = c.with("M", OptionValue::FG);
        assert_eq!(ds.next_value(&c, "M").unwrap(), Step::Exhausted);
        let bad = c.with("F", OptionValue::Factor(3));
        assert!(matches!(
            ds.next_value(&bad, "F"),
            Err(SpaceError::InvalidConfig { .. })
        ));
    }

    #[test]
    fn gated_validity() {
        let ds = DesignSpace::parse(GATED).unwrap();
        let v = ds.validate(&cfg(&[("P1", OptionValue::CG), ("P2", OptionValue::Factor(2))]));
        assert_eq!(v.violated_params(), vec!["P2"]);
        assert!(ds.is_valid(&cfg(&[("P1", OptionValue::CG), ("P2", OptionValue::Factor(1))])));
        assert!(ds.is_valid(&ds.default_config()));
    }

    #[test]
    fn gated_enumeration() {
        let ds = DesignSpace::parse(GATED).unwrap();
        let all = ds.enumerate_all(100).unwrap();
        assert_eq!(all.len(), 5);
        assert_eq!(ds.grid_size(), 6);
        assert_eq!(all[0], ds.default_config());
        let first: Vec<Config> = ds.enumerate_valid(1).map(Result::unwrap).collect();
        assert_eq!(first, vec![ds.default_config()]);
        assert!(matches!(
            ds.enumerate_all(4),
            Err(SpaceError::SpaceTooLarge { cap: 4 })
        ));
    }

    #[test]
    fn empty_space_has_one_config() {
        let ds = DesignSpace::parse("").unwrap();
        assert_eq!(ds.enumerate_all(10).unwrap(), vec![Config::default()]);
    }

    #[test]
    fn manipulate_repairs_dependents() {
        let ds = DesignSpace::parse(GATED).unwrap();
        let c = cfg(&[("P1", OptionValue::FG), ("P2", OptionValue::Factor(2))]);
        let m = ds.manipulate(&c, "P1", OptionValue::CG).unwrap();
        assert_eq!(m.get("P2"), Some(OptionValue::Factor(1)));
        assert!(ds.is_valid(&m));
    }

    #[test]
    fn text_round_trip() {
        let ds = DesignSpace::parse(GATED).unwrap();
        let again = DesignSpace::parse(&ds.to_text()).unwrap();
        assert_eq!(ds, again);
    }

    #[test]
    fn pinned_round_trip() {
        let ds = DesignSpace::parse(GATED).unwrap();
        let best = cfg(&[("P1", OptionValue::FG), ("P2", OptionValue::Factor(2))]);
        let pinned = DesignSpace::parse(&ds.pinned_text(&best)).unwrap();
        assert_eq!(pinned.default_config(), best);
        assert_eq!(pinned.grid_size(), 1);
    }

    #[test]
    fn config_key_is_order_independent() {
        let a = cfg(&[("A", OptionValue::Factor(1)), ("B", OptionValue::FG)]);
        let mut b = Config::default();
        b.set("B", OptionValue::FG);
        b.set("A", OptionValue::Factor(1));
        assert_eq!(a.key(), b.key());
        assert_ne!(a.key(), a.clone().with("A", OptionValue::Factor(2)).key());
        assert_eq!(a.key().0.len(), 64);
    }

    #[test]
    fn restrict_changes_domain_and_default() {
        let ds = DesignSpace::parse(GATED).unwrap();
        let r = ds.restrict("P1", &[OptionValue::FG], OptionValue::FG).unwrap();
        assert_eq!(r.param("P1").unwrap().grid, vec![OptionValue::FG]);
        assert_eq!(r.default_config().get("P1"), Some(OptionValue::FG));
        assert_eq!(r.enumerate_all(10).unwrap().len(), 2);
        assert!(ds.restrict("P1", &[OptionValue::FG], OptionValue::OFF).is_err());
    }
}
