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

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace orf {

enum class DType : std::uint8_t { kF32, kF64 };

std::string_view dtype_name(DType dt);

// Process-wide default precision for newly created tensors. Training runs at
// 32 bit; gradient checks switch to 64 bit through PrecisionScope.
DType default_dtype();
void set_default_dtype(DType dt);

class PrecisionScope {
 public:
  explicit PrecisionScope(DType dt);
  ~PrecisionScope();
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

 private:
  DType saved_;
};

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class AutogradError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Calls fn(T{}) with T = float or double according to dt.
template <typename F>
decltype(auto) dispatch(DType dt, F&& fn) {
  if (dt == DType::kF32) return fn(float{});
  return fn(double{});
}

template <typename T>
constexpr DType dtype_of() {
  return std::is_same_v<T, float> ? DType::kF32 : DType::kF64;
}

// Flat storage in one of the two supported precisions.
class Buffer {
 public:
  Buffer() = default;
  Buffer(DType dt, std::size_t n);

  DType dtype() const { return dtype_; }
  std::size_t size() const;

  template <typename T>
  std::span<T> span() {
    check<T>();
    return std::span<T>(std::get<std::vector<T>>(storage_));
  }
  template <typename T>
  std::span<const T> span() const {
    check<T>();
    return std::span<const T>(std::get<std::vector<T>>(storage_));
  }

  double get(std::size_t i) const;
  void set(std::size_t i, double v);
  void fill(double v);
  // this += other (same size and dtype)
  void accumulate(const Buffer& other);
  Buffer converted(DType dt) const;

 private:
  template <typename T>
  void check() const {
    if (dtype_of<T>() != dtype_)
      throw std::logic_error("buffer dtype mismatch: holds " + std::string(dtype_name(dtype_)));
  }

  DType dtype_ = DType::kF32;
  std::variant<std::vector<float>, std::vector<double>> storage_;
};

struct TensorImpl {
  Shape shape;
  Buffer data;
  bool requires_grad = false;
  bool is_leaf = true;
  std::optional<Buffer> grad;
};

// Shared handle to an n-dimensional dense array. Copies alias the same
// storage; use clone() for a deep copy. Data is not mutated in place while a
// tape references it.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const Shape& shape, DType dt = default_dtype());
  static Tensor ones(const Shape& shape, DType dt = default_dtype());
  static Tensor full(const Shape& shape, double value, DType dt = default_dtype());
  static Tensor from(const Shape& shape, std::span<const double> values,
                     DType dt = default_dtype());
  static Tensor from(const Shape& shape, std::initializer_list<double> values,
                     DType dt = default_dtype());
  static Tensor scalar(double value, DType dt = default_dtype());
  static Tensor from_buffer(const Shape& shape, Buffer data);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
  std::size_t numel() const { return impl_->data.size(); }
  DType dtype() const { return impl_->data.dtype(); }

  bool requires_grad() const { return impl_->requires_grad; }
  // Marks a leaf as trainable. Only valid on leaves.
  Tensor& set_requires_grad(bool on);
  bool is_leaf() const { return impl_->is_leaf; }

  bool has_grad() const { return impl_->grad.has_value(); }
  // Gradient as a fresh constant tensor; zeros when none was accumulated.
  Tensor grad() const;
  void zero_grad() { impl_->grad.reset(); }

  template <typename T>
  std::span<const T> data() const {
    return impl_->data.span<T>();
  }
  // Only for freshly created tensors or between training steps.
  template <typename T>
  std::span<T> mutable_data() {
    return impl_->data.span<T>();
  }

  const Buffer& buffer() const { return impl_->data; }
  Buffer& mutable_buffer() { return impl_->data; }

  double item() const;
  double at(std::size_t flat) const { return impl_->data.get(flat); }
  std::vector<double> to_vector() const;

  Tensor detach() const;
  Tensor clone() const;
  Tensor to(DType dt) const;

  TensorImpl* impl() const { return impl_.get(); }
  bool same_as(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
  friend Tensor make_result(const Shape& shape, DType dt);

  std::shared_ptr<TensorImpl> impl_;
};

// ---------------------------------------------------------------- autograd --

// Backward rule: grad_out is a constant tensor shaped like the output; the
// rule returns one entry per input (undefined where no gradient is needed).
using BackwardFn = std::function<std::vector<Tensor>(const Tensor& grad_out)>;

struct TapeNode {
  std::string op;
  std::vector<Tensor> inputs;
  Tensor output;
  BackwardFn backward;
  // Same contract, but built from recorded ops so the result is itself
  // differentiable. Only the ops needed for gradient penalties provide it.
  BackwardFn differentiable_backward;
};

// Ordered record of differentiable operations executed on this thread.
class Tape {
 public:
  void record(TapeNode node) { nodes_.push_back(std::move(node)); }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  void clear() { nodes_.clear(); }
  const TapeNode& node(std::size_t i) const { return nodes_[i]; }

 private:
  std::vector<TapeNode> nodes_;
};

// The tape ops record onto. Each thread starts with its own.
Tape& current_tape();

// Routes recording to `tape` for the lifetime of the scope.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* saved_;
};

bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool saved_;
};

// Allocates an op result (non-leaf, no grad) of the given shape.
Tensor make_result(const Shape& shape, DType dt);

// True when an op over these inputs must be recorded.
bool needs_record(std::initializer_list<const Tensor*> inputs);
bool needs_record(std::span<const Tensor> inputs);

// Marks `output` as produced by a recorded op and pushes the node.
void record_op(std::string op, std::vector<Tensor> inputs, Tensor& output, BackwardFn backward,
               BackwardFn differentiable_backward = nullptr);

// Replays the current tape in reverse, accumulating into every requires-grad
// input. The loss must hold exactly one element. Clears the tape.
void backward(const Tensor& loss);

// Vector-Jacobian form: seeds[i] is the upstream gradient of outputs[i].
void backward(std::span<const Tensor> outputs, std::span<const Tensor> seeds);

// Gradient of a scalar output with respect to `inputs`, expressed as recorded
// ops so it can be differentiated again. The tape is kept. Throws
// AutogradError naming the op when a node lacks a differentiable rule.
std::vector<Tensor> grad_with_graph(const Tensor& output, std::span<const Tensor> inputs);

}  // namespace orf
