/* Copyright 2026 The orf Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "orf/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>

#include "orf/ops.hpp"
#include "orf/simd/kernels.hpp"

namespace orf {
namespace {

DType g_default_dtype = DType::kF32;

thread_local Tape t_root_tape;
thread_local Tape* t_tape = &t_root_tape;
thread_local bool t_grad_enabled = true;

}  // namespace

std::string_view dtype_name(DType dt) { return dt == DType::kF32 ? "f32" : "f64"; }

DType default_dtype() { return g_default_dtype; }
void set_default_dtype(DType dt) { g_default_dtype = dt; }

PrecisionScope::PrecisionScope(DType dt) : saved_(g_default_dtype) { g_default_dtype = dt; }
PrecisionScope::~PrecisionScope() { g_default_dtype = saved_; }

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// ------------------------------------------------------------------ Buffer --

Buffer::Buffer(DType dt, std::size_t n) : dtype_(dt) {
  if (dt == DType::kF32) {
    storage_ = std::vector<float>(n, 0.0f);
  } else {
    storage_ = std::vector<double>(n, 0.0);
  }
}

std::size_t Buffer::size() const {
  return std::visit([](const auto& v) { return v.size(); }, storage_);
}

double Buffer::get(std::size_t i) const {
  return std::visit([i](const auto& v) { return static_cast<double>(v.at(i)); }, storage_);
}

void Buffer::set(std::size_t i, double value) {
  std::visit([&](auto& v) { v.at(i) = static_cast<typename std::decay_t<decltype(v)>::value_type>(value); },
             storage_);
}

void Buffer::fill(double value) {
  std::visit(
      [&](auto& v) {
        using T = typename std::decay_t<decltype(v)>::value_type;
        std::fill(v.begin(), v.end(), static_cast<T>(value));
      },
      storage_);
}

void Buffer::accumulate(const Buffer& other) {
  if (other.dtype_ != dtype_ || other.size() != size())
    throw std::logic_error("gradient accumulation between incompatible buffers");
  dispatch(dtype_, [&]<typename T>(T) {
    auto dst = span<T>();
    auto src = other.span<T>();
    simd::axpy<T>(dst.size(), T(1), src.data(), dst.data());
  });
}

Buffer Buffer::converted(DType dt) const {
  Buffer out(dt, size());
  for (std::size_t i = 0; i < size(); ++i) out.set(i, get(i));
  return out;
}

// ------------------------------------------------------------------ Tensor --

Tensor make_result(const Shape& shape, DType dt) {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = shape;
  impl->data = Buffer(dt, shape_numel(shape));
  return Tensor(std::move(impl));
}

Tensor Tensor::zeros(const Shape& shape, DType dt) { return make_result(shape, dt); }

Tensor Tensor::ones(const Shape& shape, DType dt) { return full(shape, 1.0, dt); }

Tensor Tensor::full(const Shape& shape, double value, DType dt) {
  Tensor t = make_result(shape, dt);
  t.impl_->data.fill(value);
  return t;
}

Tensor Tensor::from(const Shape& shape, std::span<const double> values, DType dt) {
  if (shape_numel(shape) != values.size())
    throw ShapeError("Tensor::from: " + std::to_string(values.size()) +
                     " values do not fill shape " + shape_str(shape));
  Tensor t = make_result(shape, dt);
  for (std::size_t i = 0; i < values.size(); ++i) t.impl_->data.set(i, values[i]);
  return t;
}

Tensor Tensor::from(const Shape& shape, std::initializer_list<double> values, DType dt) {
  return from(shape, std::span<const double>(values.begin(), values.size()), dt);
}

Tensor Tensor::scalar(double value, DType dt) { return full({1}, value, dt); }

Tensor Tensor::from_buffer(const Shape& shape, Buffer data) {
  if (shape_numel(shape) != data.size())
    throw ShapeError("Tensor::from_buffer: buffer size does not match shape " + shape_str(shape));
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = shape;
  impl->data = std::move(data);
  return Tensor(std::move(impl));
}

Tensor& Tensor::set_requires_grad(bool on) {
  if (!impl_->is_leaf) throw AutogradError("set_requires_grad on a non-leaf tensor");
  impl_->requires_grad = on;
  return *this;
}

Tensor Tensor::grad() const {
  if (!impl_->grad) return zeros(impl_->shape, dtype());
  return from_buffer(impl_->shape, *impl_->grad);
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return impl_->data.get(0);
}

std::vector<double> Tensor::to_vector() const {
  std::vector<double> out(numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = impl_->data.get(i);
  return out;
}

Tensor Tensor::detach() const {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = impl_->shape;
  impl->data = impl_->data;
  return Tensor(std::move(impl));
}

Tensor Tensor::clone() const { return detach(); }

Tensor Tensor::to(DType dt) const {
  if (dt == dtype()) return detach();
  return from_buffer(impl_->shape, impl_->data.converted(dt));
}

// ---------------------------------------------------------------- autograd --

Tape& current_tape() { return *t_tape; }

TapeScope::TapeScope(Tape& tape) : saved_(t_tape) { t_tape = &tape; }
TapeScope::~TapeScope() { t_tape = saved_; }

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : saved_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = saved_; }

bool needs_record(std::initializer_list<const Tensor*> inputs) {
  if (!t_grad_enabled) return false;
  for (const Tensor* t : inputs)
    if (t != nullptr && t->defined() && t->requires_grad()) return true;
  return false;
}

bool needs_record(std::span<const Tensor> inputs) {
  if (!t_grad_enabled) return false;
  for (const Tensor& t : inputs)
    if (t.defined() && t.requires_grad()) return true;
  return false;
}

void record_op(std::string op, std::vector<Tensor> inputs, Tensor& output, BackwardFn backward,
               BackwardFn differentiable_backward) {
  output.impl()->requires_grad = true;
  output.impl()->is_leaf = false;
  TapeNode node;
  node.op = std::move(op);
  node.inputs = std::move(inputs);
  node.output = output;
  node.backward = std::move(backward);
  node.differentiable_backward = std::move(differentiable_backward);
  t_tape->record(std::move(node));
}

namespace {

void accumulate_grad(TensorImpl* impl, const Tensor& g, const std::string& op) {
  if (g.shape() != impl->shape)
    throw AutogradError("backward of '" + op + "' produced gradient " + shape_str(g.shape()) +
                        " for input " + shape_str(impl->shape));
  if (g.dtype() != impl->data.dtype())
    throw AutogradError("backward of '" + op + "' produced gradient in the wrong precision");
  if (!impl->grad) {
    impl->grad = g.buffer();
  } else {
    impl->grad->accumulate(g.buffer());
  }
}

void replay(Tape& tape) {
  NoGradGuard no_grad;
  for (std::size_t i = tape.size(); i-- > 0;) {
    const TapeNode& node = tape.node(i);
    TensorImpl* out = node.output.impl();
    if (!out->grad) continue;
    Tensor g = Tensor::from_buffer(out->shape, std::move(*out->grad));
    out->grad.reset();
    std::vector<Tensor> grads = node.backward(g);
    if (grads.size() != node.inputs.size())
      throw AutogradError("backward of '" + node.op + "' returned the wrong arity");
    for (std::size_t j = 0; j < grads.size(); ++j) {
      const Tensor& in = node.inputs[j];
      if (!in.defined() || !in.requires_grad() || !grads[j].defined()) continue;
      accumulate_grad(in.impl(), grads[j], node.op);
    }
  }
  tape.clear();
}

}  // namespace

void backward(const Tensor& loss) {
  if (!loss.defined()) throw AutogradError("backward on an undefined tensor");
  if (loss.numel() != 1)
    throw AutogradError("backward requires a single-element loss, got shape " +
                        shape_str(loss.shape()));
  Tensor seed = Tensor::ones(loss.shape(), loss.dtype());
  backward(std::span<const Tensor>(&loss, 1), std::span<const Tensor>(&seed, 1));
}

void backward(std::span<const Tensor> outputs, std::span<const Tensor> seeds) {
  if (outputs.size() != seeds.size())
    throw AutogradError("backward: one seed per output is required");
  Tape& tape = current_tape();
  bool any = false;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (!outputs[i].requires_grad()) continue;
    accumulate_grad(outputs[i].impl(), seeds[i], "seed");
    any = true;
  }
  if (!any) {
    tape.clear();
    return;
  }
  replay(tape);
}

std::vector<Tensor> grad_with_graph(const Tensor& output, std::span<const Tensor> inputs) {
  if (output.numel() != 1)
    throw AutogradError("grad_with_graph requires a single-element output");
  Tape& tape = current_tape();
  std::unordered_map<const TensorImpl*, Tensor> grads;
  if (output.requires_grad()) grads[output.impl()] = Tensor::ones(output.shape(), output.dtype());
  const std::size_t n = tape.size();
  for (std::size_t i = n; i-- > 0;) {
    // Copy: recording below may reallocate the node storage.
    const TapeNode node = tape.node(i);
    auto it = grads.find(node.output.impl());
    if (it == grads.end()) continue;
    if (!node.differentiable_backward)
      throw AutogradError("nested differentiation through '" + node.op +
                          "' is not supported; build the critic from conv2d, linear, "
                          "leaky_relu, reshape and elementwise ops, or set lambda_r1 to 0");
    Tensor g = it->second;
    std::vector<Tensor> gin = node.differentiable_backward(g);
    for (std::size_t j = 0; j < gin.size(); ++j) {
      const Tensor& in = node.inputs[j];
      if (!in.defined() || !in.requires_grad() || !gin[j].defined()) continue;
      Tensor& slot = grads[in.impl()];
      slot = slot.defined() ? ops::add(slot, gin[j]) : gin[j];
    }
  }
  std::vector<Tensor> out;
  out.reserve(inputs.size());
  for (const Tensor& in : inputs) {
    auto it = grads.find(in.impl());
    out.push_back(it != grads.end() ? it->second : Tensor::zeros(in.shape(), in.dtype()));
  }
  return out;
}

}  // namespace orf
