#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace trajopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Step size used to disable proximal regularization (pure Gauss-Newton).
inline constexpr double kInfiniteStep = std::numeric_limits<double>::infinity();

inline double inverse_step(double gamma) {
  return std::isinf(gamma) ? 0.0 : 1.0 / gamma;
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// A rollout produced a non-finite state.
class DivergedTrajectoryError : public std::runtime_error {
 public:
  explicit DivergedTrajectoryError(int time_step)
      : std::runtime_error("non-finite state after dynamics step t=" +
                           std::to_string(time_step)),
        time_step_(time_step) {}
  int time_step() const noexcept { return time_step_; }

 private:
  int time_step_;
};

/// A backward-pass control Hessian failed its positive-definite factorization.
class IllConditionedSubproblemError : public std::runtime_error {
 public:
  explicit IllConditionedSubproblemError(int time_step)
      : std::runtime_error("control-block Hessian not positive definite at t=" +
                           std::to_string(time_step)),
        time_step_(time_step) {}
  int time_step() const noexcept { return time_step_; }

 private:
  int time_step_;
};

/// A derivative or feature was requested that the object cannot provide.
class CapabilityError : public std::runtime_error {
 public:
  explicit CapabilityError(const std::string& what) : std::runtime_error(what) {}
};

/// A line search exhausted its trial budget without an acceptable point.
class LineSearchError : public std::runtime_error {
 public:
  explicit LineSearchError(const std::string& what) : std::runtime_error(what) {}
};

/// The regularization loop overflowed: the local model stays indefinite.
class IndefiniteModelError : public std::runtime_error {
 public:
  explicit IndefiniteModelError(const std::string& what) : std::runtime_error(what) {}
};

/// The problem does not have the structure required by the algorithm.
class UnsupportedStructureError : public std::runtime_error {
 public:
  explicit UnsupportedStructureError(const std::string& what)
      : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Blocked vectors
// ---------------------------------------------------------------------------

/// Sequence of equally sized vectors stored as one contiguous flat array,
/// time index leading.  The tag keeps command-shaped (tau blocks of p) and
/// state-shaped (tau blocks of d) sequences distinct at compile time.
template <typename Tag>
class BlockedVector {
 public:
  BlockedVector() = default;
  BlockedVector(int count, int dim)
      : count_(count), dim_(dim), flat_(Vector::Zero(count * dim)) {}
  BlockedVector(int count, int dim, Vector flat)
      : count_(count), dim_(dim), flat_(std::move(flat)) {
    if (flat_.size() != static_cast<Eigen::Index>(count) * dim) {
      throw std::invalid_argument("flat vector size does not match count*dim");
    }
  }

  static BlockedVector zero(int count, int dim) { return BlockedVector(count, dim); }

  int count() const noexcept { return count_; }
  int dim() const noexcept { return dim_; }
  Eigen::Index size() const noexcept { return flat_.size(); }

  Eigen::VectorBlock<Vector> operator[](int t) {
    return flat_.segment(static_cast<Eigen::Index>(t) * dim_, dim_);
  }
  Eigen::VectorBlock<const Vector> operator[](int t) const {
    return flat_.segment(static_cast<Eigen::Index>(t) * dim_, dim_);
  }

  Vector& flat() noexcept { return flat_; }
  const Vector& flat() const noexcept { return flat_; }

  double norm() const { return flat_.norm(); }
  double dot(const BlockedVector& other) const { return flat_.dot(other.flat_); }
  bool all_finite() const { return flat_.allFinite(); }

  bool same_shape(const BlockedVector& other) const {
    return count_ == other.count_ && dim_ == other.dim_;
  }

  BlockedVector& operator+=(const BlockedVector& other) {
    require_same_shape(other);
    flat_ += other.flat_;
    return *this;
  }
  BlockedVector& operator-=(const BlockedVector& other) {
    require_same_shape(other);
    flat_ -= other.flat_;
    return *this;
  }
  BlockedVector& operator*=(double s) {
    flat_ *= s;
    return *this;
  }

  friend BlockedVector operator+(BlockedVector a, const BlockedVector& b) {
    a += b;
    return a;
  }
  friend BlockedVector operator-(BlockedVector a, const BlockedVector& b) {
    a -= b;
    return a;
  }
  friend BlockedVector operator*(double s, BlockedVector a) {
    a *= s;
    return a;
  }

 private:
  void require_same_shape(const BlockedVector& other) const {
    if (!same_shape(other)) {
      throw std::invalid_argument("blocked vector shape mismatch");
    }
  }

  int count_ = 0;
  int dim_ = 0;
  Vector flat_;
};

struct CommandTag {};
struct StateTag {};
struct NoiseTag {};

/// Stacked controls u_0..u_{tau-1}, tau blocks of length p.
using Command = BlockedVector<CommandTag>;
/// Stacked states x_1..x_tau (or any dual vector of the same shape).
using StateSequence = BlockedVector<StateTag>;
/// Stacked noise draws w_0..w_{tau-1}, tau blocks of length q.
using NoiseSequence = BlockedVector<NoiseTag>;

/// States produced by a rollout; the initial state is kept separate so the
/// stacked part matches the shape expected by dual vectors and Jacobians.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(Vector initial_state, StateSequence states)
      : initial_state_(std::move(initial_state)), states_(std::move(states)) {
    if (initial_state_.size() != states_.dim()) {
      throw std::invalid_argument("initial state dimension mismatch");
    }
  }

  int horizon() const noexcept { return states_.count(); }
  int state_dim() const noexcept { return states_.dim(); }

  const Vector& initial_state() const noexcept { return initial_state_; }
  const StateSequence& states() const noexcept { return states_; }

  /// State at time t; t=0 is the initial state, t=1..tau the rolled-out ones.
  Eigen::Ref<const Vector> state(int t) const {
    if (t == 0) return initial_state_;
    return states_[t - 1];
  }

 private:
  Vector initial_state_;
  StateSequence states_;
};

}  // namespace trajopt
