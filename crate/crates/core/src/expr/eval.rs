//! Numeric evaluation.
//!
//! A [`Tape`] flattens one or more expressions into a straight-line program
//! over numbered input slots. Subtrees shared by reference (which is how
//! differentiation builds its results) are evaluated once.

use std::collections::{BTreeMap, HashMap};

use num_traits::ToPrimitive;

use super::{Expr, ExprError, Node};
use crate::scalar::Real;

/// Values for the coordinates and parameters an expression refers to.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalContext {
    pub coordinates: BTreeMap<String, f64>,
    pub parameters: BTreeMap<String, f64>,
}

impl EvalContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn coordinate(mut self, name: &str, value: f64) -> Self {
        self.coordinates.insert(name.to_string(), value);
        self
    }

    pub fn parameter(mut self, name: &str, value: f64) -> Self {
        self.parameters.insert(name.to_string(), value);
        self
    }

    pub fn lookup(&self, name: &str) -> Option<f64> {
        self.coordinates
            .get(name)
            .or_else(|| self.parameters.get(name))
            .copied()
    }
}

/// Evaluates `e` in double precision at the point described by `ctx`.
pub fn evaluate(e: &Expr, ctx: &EvalContext) -> Result<f64, ExprError> {
    let names: Vec<String> = e.free_symbols().into_iter().collect();
    let mut values = Vec::with_capacity(names.len());
    for name in &names {
        let v = ctx
            .lookup(name)
            .ok_or_else(|| ExprError::UnboundSymbol(name.clone()))?;
        if !v.is_finite() {
            return Err(ExprError::NonFiniteBinding(name.clone()));
        }
        values.push(v);
    }
    let tape = Tape::compile(std::slice::from_ref(e), &names)?;
    Ok(tape.eval::<f64>(&values)?[0])
}

#[derive(Debug, Clone)]
enum Op {
    Input(usize),
    Const(f64),
    Neg(usize),
    Add(Vec<usize>),
    Mul(Vec<usize>),
    Div(usize, usize),
    PowInt(usize, i32),
    PowFrac { base: usize, exponent: f64 },
    Sqrt(usize),
}

/// Straight-line program evaluating a fixed list of expressions.
#[derive(Debug, Clone)]
pub struct Tape {
    inputs: Vec<String>,
    ops: Vec<Op>,
    outputs: Vec<usize>,
}

impl Tape {
    /// Compiles `exprs` against the ordered input names. Every symbol must
    /// appear in `inputs`.
    pub fn compile<S: AsRef<str>>(exprs: &[Expr], inputs: &[S]) -> Result<Tape, ExprError> {
        let slots: HashMap<&str, usize> = inputs
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_ref(), i))
            .collect();
        let mut builder = Builder { slots, ops: Vec::new(), memo: HashMap::new(), inputs: HashMap::new() };
        let outputs = exprs
            .iter()
            .map(|e| builder.emit(e))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Tape {
            inputs: inputs.iter().map(|s| s.as_ref().to_string()).collect(),
            ops: builder.ops,
            outputs,
        })
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn output_len(&self) -> usize {
        self.outputs.len()
    }

    pub fn eval<S: Real>(&self, inputs: &[S]) -> Result<Vec<S>, ExprError> {
        let mut out = vec![S::zero(); self.outputs.len()];
        self.eval_into(inputs, &mut out)?;
        Ok(out)
    }

    pub fn eval_into<S: Real>(&self, inputs: &[S], out: &mut [S]) -> Result<(), ExprError> {
        assert_eq!(inputs.len(), self.inputs.len(), "tape input arity");
        assert_eq!(out.len(), self.outputs.len(), "tape output arity");
        let mut reg: Vec<S> = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let v = match op {
                Op::Input(i) => inputs[*i],
                Op::Const(c) => S::from_f64_lossy(*c),
                Op::Neg(a) => -reg[*a],
                Op::Add(items) => items.iter().fold(S::zero(), |acc, &i| acc + reg[i]),
                Op::Mul(items) => items.iter().fold(S::one(), |acc, &i| acc * reg[i]),
                Op::Div(a, b) => {
                    if reg[*b] == S::zero() {
                        return Err(ExprError::Domain("division by zero".into()));
                    }
                    reg[*a] / reg[*b]
                }
                Op::PowInt(a, e) => {
                    if reg[*a] == S::zero() && *e < 0 {
                        return Err(ExprError::Domain("zero raised to a negative power".into()));
                    }
                    reg[*a].powi(*e)
                }
                Op::PowFrac { base, exponent } => {
                    let b = reg[*base];
                    let e = S::from_f64_lossy(*exponent);
                    if b < S::zero() {
                        return Err(ExprError::Domain(
                            "negative base with fractional exponent".into(),
                        ));
                    }
                    if b == S::zero() && *exponent < 0.0 {
                        return Err(ExprError::Domain("zero raised to a negative power".into()));
                    }
                    b.powf(e)
                }
                Op::Sqrt(a) => {
                    if reg[*a] < S::zero() {
                        return Err(ExprError::Domain("square root of a negative number".into()));
                    }
                    reg[*a].sqrt()
                }
            };
            if !v.is_finite() {
                return Err(ExprError::Domain("non-finite intermediate value".into()));
            }
            reg.push(v);
        }
        for (slot, &r) in out.iter_mut().zip(&self.outputs) {
            *slot = reg[r];
        }
        Ok(())
    }
}

struct Builder<'a> {
    slots: HashMap<&'a str, usize>,
    ops: Vec<Op>,
    memo: HashMap<*const Node, usize>,
    inputs: HashMap<usize, usize>,
}

impl Builder<'_> {
    fn push(&mut self, op: Op) -> usize {
        self.ops.push(op);
        self.ops.len() - 1
    }

    fn emit(&mut self, e: &Expr) -> Result<usize, ExprError> {
        if let Some(&r) = self.memo.get(&e.ptr()) {
            return Ok(r);
        }
        let r = match e.node() {
            Node::Num(v) => {
                let c = v.to_f64().unwrap_or(f64::NAN);
                self.push(Op::Const(c))
            }
            Node::Sym(name) => {
                let slot = *self
                    .slots
                    .get(&**name)
                    .ok_or_else(|| ExprError::UnboundSymbol(name.to_string()))?;
                match self.inputs.get(&slot) {
                    Some(&r) => r,
                    None => {
                        let r = self.push(Op::Input(slot));
                        self.inputs.insert(slot, r);
                        r
                    }
                }
            }
            Node::Neg(a) => {
                let a = self.emit(a)?;
                self.push(Op::Neg(a))
            }
            Node::Add(items) => {
                let items = items.iter().map(|i| self.emit(i)).collect::<Result<_, _>>()?;
                self.push(Op::Add(items))
            }
            Node::Mul(items) => {
                let items = items.iter().map(|i| self.emit(i)).collect::<Result<_, _>>()?;
                self.push(Op::Mul(items))
            }
            Node::Div(a, b) => {
                let a = self.emit(a)?;
                let b = self.emit(b)?;
                self.push(Op::Div(a, b))
            }
            Node::Pow(base, exponent) => {
                let b = self.emit(base)?;
                match exponent.is_integer().then(|| exponent.to_integer().to_i32()).flatten() {
                    Some(i) => self.push(Op::PowInt(b, i)),
                    None => {
                        let value = exponent.to_f64().unwrap_or(f64::NAN);
                        self.push(Op::PowFrac { base: b, exponent: value })
                    }
                }
            }
            Node::Sqrt(a) => {
                let a = self.emit(a)?;
                self.push(Op::Sqrt(a))
            }
        };
        self.memo.insert(e.ptr(), r);
        Ok(r)
    }
}
