//! Reverse-mode tape.
//!
//! Nodes are appended in evaluation order, so the node vector is already a
//! topological order and the backward sweep is a single reverse pass.

use crate::error::{NnError, Result};
use crate::float::Float;
use crate::tensor::Tensor;

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Everything a node's backward rule may look at.
pub struct BackwardCtx<'a, T: Float> {
    pub inputs: Vec<&'a Tensor<T>>,
    pub output: &'a Tensor<T>,
    pub grad: &'a Tensor<T>,
    /// Whether each input needs a gradient; rules may skip work for `false`.
    pub needs_grad: Vec<bool>,
}

/// Backward rule of a differentiable operation.
///
/// Implementations return one entry per input, `None` where no gradient is
/// produced.
pub trait Function<T: Float> {
    fn name(&self) -> &'static str;
    fn backward(&self, ctx: BackwardCtx<'_, T>) -> Result<Vec<Option<Tensor<T>>>>;
}

struct Node<T: Float> {
    value: Tensor<T>,
    inputs: Vec<Var>,
    func: Option<Box<dyn Function<T>>>,
    requires_grad: bool,
}

pub struct Graph<T: Float = f32> {
    nodes: Vec<Node<T>>,
}

impl<T: Float> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Float> Graph<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Constant input; gradients never flow into it.
    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Vec::new(), None, false)
    }

    /// Differentiable leaf (a parameter or an input under test).
    pub fn leaf(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Vec::new(), None, true)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Record the result of an operation together with its backward rule.
    pub fn apply(&mut self, inputs: &[Var], value: Tensor<T>, func: Box<dyn Function<T>>) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        let func = requires_grad.then_some(func);
        self.push(value, inputs.to_vec(), func, requires_grad)
    }

    fn push(
        &mut self,
        value: Tensor<T>,
        inputs: Vec<Var>,
        func: Option<Box<dyn Function<T>>>,
        requires_grad: bool,
    ) -> Var {
        self.nodes.push(Node {
            value,
            inputs,
            func,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Gradients of the single-element node `loss` with respect to every
    /// differentiable node.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        if loss.0 >= self.nodes.len() {
            return Err(NnError::Graph(format!("unknown variable {}", loss.0)));
        }
        let lv = &self.nodes[loss.0].value;
        if lv.len() != 1 {
            return Err(NnError::Graph(format!(
                "backward needs a scalar loss, got shape {:?}",
                lv.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::full(lv.shape(), T::one()));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            let Some(func) = node.func.as_ref() else {
                continue;
            };
            let Some(grad) = grads[idx].take() else {
                continue;
            };
            let ctx = BackwardCtx {
                inputs: node.inputs.iter().map(|v| &self.nodes[v.0].value).collect(),
                output: &node.value,
                grad: &grad,
                needs_grad: node
                    .inputs
                    .iter()
                    .map(|v| self.nodes[v.0].requires_grad)
                    .collect(),
            };
            let input_grads = func.backward(ctx)?;
            if input_grads.len() != node.inputs.len() {
                return Err(NnError::Graph(format!(
                    "{} returned {} gradients for {} inputs",
                    func.name(),
                    input_grads.len(),
                    node.inputs.len()
                )));
            }
            for (inp, g) in node.inputs.iter().zip(input_grads) {
                let Some(g) = g else { continue };
                if !self.nodes[inp.0].requires_grad {
                    continue;
                }
                match grads[inp.0].as_mut() {
                    Some(acc) => acc.axpy(T::one(), &g)?,
                    None => grads[inp.0] = Some(g),
                }
            }
        }
        Ok(Gradients { grads })
    }
}

pub struct Gradients<T: Float> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Float> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor<T>> {
        self.grads.get_mut(v.0).and_then(|g| g.take())
    }
}
