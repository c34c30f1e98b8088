use std::collections::HashMap;
use std::fmt;

use super::scalar::{DomainKind, Scalar};
use super::ExprError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    /// Index into the owning expression's variable list.
    Var(usize),
    Neg(Box<Node>),
    Call(Func, Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
}

/// A parsed expression together with the variable list it was parsed against.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    variables: Vec<String>,
}

impl Expr {
    pub(crate) fn new(root: Node, variables: Vec<String>) -> Self {
        Expr { root, variables }
    }

    pub fn constant(value: f64, variables: &[&str]) -> Self {
        Expr::new(Node::Const(value), variables.iter().map(|s| s.to_string()).collect())
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    /// Variables actually referenced by the tree.
    pub fn free_variables(&self) -> Vec<&str> {
        let mut used = vec![false; self.variables.len()];
        fn walk(n: &Node, used: &mut [bool]) {
            match n {
                Node::Const(_) => {}
                Node::Var(i) => used[*i] = true,
                Node::Neg(a) | Node::Call(_, a) | Node::Pow(a, _) => walk(a, used),
                Node::Binary(_, a, b) => {
                    walk(a, used);
                    walk(b, used);
                }
            }
        }
        walk(&self.root, &mut used);
        self.variables
            .iter()
            .zip(used)
            .filter(|(_, u)| *u)
            .map(|(v, _)| v.as_str())
            .collect()
    }

    pub fn uses_function(&self, func: Func) -> bool {
        fn walk(n: &Node, func: Func) -> bool {
            match n {
                Node::Const(_) | Node::Var(_) => false,
                Node::Call(f, a) => *f == func || walk(a, func),
                Node::Neg(a) | Node::Pow(a, _) => walk(a, func),
                Node::Binary(_, a, b) => walk(a, func) || walk(b, func),
            }
        }
        walk(&self.root, func)
    }

    /// Evaluate with positional bindings (same order as `variables()`).
    pub fn eval_with<S: Scalar>(&self, values: &[S]) -> Result<S, ExprError> {
        if values.len() < self.variables.len() {
            return Err(ExprError::MissingVariable(self.variables[values.len()].clone()));
        }
        let v = eval_node(&self.root, values, &self.variables)?;
        if !v.is_finite() {
            return Err(ExprError::Domain {
                kind: DomainKind::NonFinite,
                subexpr: self.to_string(),
            });
        }
        Ok(v)
    }

    pub fn eval(&self, values: &[f64]) -> Result<f64, ExprError> {
        self.eval_with(values)
    }

    /// Evaluate with a name → value environment.
    pub fn eval_env(&self, env: &HashMap<String, f64>) -> Result<f64, ExprError> {
        let values = self.bind(env)?;
        self.eval_with(&values)
    }

    pub fn eval_dual_env(
        &self,
        env: &HashMap<String, super::Dual>,
    ) -> Result<super::Dual, ExprError> {
        let values = self.bind(env)?;
        self.eval_with(&values)
    }

    fn bind<S: Scalar>(&self, env: &HashMap<String, S>) -> Result<Vec<S>, ExprError> {
        let free = self.free_variables();
        self.variables
            .iter()
            .map(|name| match env.get(name) {
                Some(v) => Ok(*v),
                None if free.contains(&name.as_str()) => {
                    Err(ExprError::MissingVariable(name.clone()))
                }
                None => Ok(S::constant(0.0)),
            })
            .collect()
    }
}

fn eval_node<S: Scalar>(n: &Node, values: &[S], vars: &[String]) -> Result<S, ExprError> {
    let domain = |kind: DomainKind| ExprError::Domain {
        kind,
        subexpr: NodeDisplay { node: n, vars }.to_string(),
    };
    match n {
        Node::Const(c) => Ok(S::constant(*c)),
        Node::Var(i) => Ok(values[*i]),
        Node::Neg(a) => Ok(-eval_node(a, values, vars)?),
        Node::Call(f, a) => eval_node(a, values, vars)?.apply(*f).map_err(domain),
        Node::Pow(a, k) => eval_node(a, values, vars)?.powi(*k).map_err(domain),
        Node::Binary(op, a, b) => {
            let x = eval_node(a, values, vars)?;
            let y = eval_node(b, values, vars)?;
            Ok(match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => {
                    if y.is_zero() {
                        return Err(domain(DomainKind::DivisionByZero));
                    }
                    x / y
                }
            })
        }
    }
}

struct NodeDisplay<'a> {
    node: &'a Node,
    vars: &'a [String],
}

impl fmt::Display for NodeDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |node| NodeDisplay { node, vars: self.vars };
        match self.node {
            Node::Const(c) => write!(f, "{c:?}"),
            Node::Var(i) => f.write_str(&self.vars[*i]),
            Node::Neg(a) => write!(f, "(-({}))", sub(a)),
            Node::Call(func, a) => write!(f, "{}({})", func.name(), sub(a)),
            Node::Binary(op, a, b) => write!(f, "({} {} {})", sub(a), op.symbol(), sub(b)),
            Node::Pow(a, k) => write!(f, "({})^{k}", sub(a)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        NodeDisplay { node: &self.root, vars: &self.variables }.fmt(f)
    }
}
