// Copyright 2026 The truckloop Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"

namespace truckloop {

using VariableId = std::uint32_t;
using Bit = std::uint8_t;

/// One value per variable, each 0 or 1.
using Assignment = std::vector<Bit>;

/// Sorted set of distinct variables. The empty monomial is the constant term.
using Monomial = std::vector<VariableId>;

/// Real-coefficient polynomial over boolean variables.
///
/// Terms are kept in canonical form: every monomial is sorted with no
/// repeated variable (x*x == x is applied on insertion) and no coefficient is
/// exactly zero. Iteration order over terms is deterministic.
class BinaryPolynomial {
public:
    using TermMap = std::map<Monomial, double>;

    BinaryPolynomial() = default;
    explicit BinaryPolynomial(std::size_t num_vars) : num_vars_(num_vars) {}

    /// Adds `coeff` times the product of `vars`. Duplicates in `vars` are
    /// collapsed. num_vars grows to cover every variable seen.
    void add_term(std::span<const VariableId> vars, double coeff);
    void add_term(std::initializer_list<VariableId> vars, double coeff) {
        add_term(std::span<const VariableId>(vars.begin(), vars.size()), coeff);
    }
    void add_constant(double coeff) { add_term(std::span<const VariableId>{}, coeff); }

    /// Grows the variable range without adding terms.
    void reserve_vars(std::size_t num_vars);

    std::size_t num_vars() const noexcept { return num_vars_; }
    std::size_t num_terms() const noexcept { return terms_.size(); }
    bool empty() const noexcept { return terms_.empty(); }
    std::size_t degree() const noexcept;
    const TermMap& terms() const noexcept { return terms_; }

    /// Coefficient of a canonical monomial, 0 if absent.
    double coefficient(const Monomial& m) const;

    /// Sum of |coeff| over all terms, constant included.
    double abs_coefficient_sum() const noexcept;

    /// Largest |coeff| among non-constant terms (0 if none).
    double max_abs_coefficient() const noexcept;

    /// Throws DimensionError if a.size() != num_vars().
    double evaluate(std::span<const Bit> a) const;

    BinaryPolynomial& operator*=(double c);
    friend bool operator==(const BinaryPolynomial&, const BinaryPolynomial&) = default;

private:
    std::size_t num_vars_ = 0;
    TermMap terms_;
};

/// p + c*q. Result has max(p.num_vars, q.num_vars) variables.
BinaryPolynomial add_scaled(const BinaryPolynomial& p, const BinaryPolynomial& q, double c);

/// An auxiliary variable introduced by order reduction: aux == left*right.
struct Substitution {
    VariableId aux;
    VariableId left;
    VariableId right;
    friend bool operator==(const Substitution&, const Substitution&) = default;
};

struct QuadraticReduction {
    BinaryPolynomial qubo;
    /// In creation order. Auxiliary ids start at the original num_vars.
    std::vector<Substitution> var_map;
    double penalty = 0.0;
    std::size_t original_num_vars = 0;

    /// Drops auxiliary variables from an assignment of `qubo`.
    Assignment project(std::span<const Bit> a) const;
    /// Extends an assignment of the original variables so every auxiliary
    /// equals the product it stands for.
    Assignment lift(std::span<const Bit> a) const;
};

/// Penalty used when none is given: 1 + 2 * sum |coeff|. Any violated
/// substitution then costs more than the whole objective range.
double auto_reduction_penalty(const BinaryPolynomial& p);

/// Reduces `p` to degree <= 2 by repeatedly replacing the variable pair that
/// occurs in the most monomials of degree >= 3 with a fresh auxiliary
/// variable a, adding penalty * (xy - 2xa - 2ya + 3a). The penalty is zero
/// when a == xy and at least `penalty` otherwise. Ties between equally
/// frequent pairs go to the lexicographically smallest pair.
///
/// Throws ParameterError if an explicit penalty is not positive.
QuadraticReduction reduce_to_quadratic(const BinaryPolynomial& p,
                                       std::optional<double> penalty = std::nullopt);

struct Minimum {
    Assignment assignment;
    double value = 0.0;
};

inline constexpr std::size_t kDefaultBruteForceCap = 24;

/// Exhaustive minimization. Among minimizers the lexicographically smallest
/// assignment (x0 most significant) is returned; values within
/// 1e-12 * sum|coeff| of each other count as tied.
///
/// Throws SizeError if num_vars exceeds `max_vars`.
Minimum brute_force_minimize(const BinaryPolynomial& p,
                             std::size_t max_vars = kDefaultBruteForceCap);

/// Flat, flip-friendly view of a polynomial. Keeps per-term zero counts so
/// the energy change of flipping one variable costs O(terms touching it).
class FlipEvaluator {
public:
    explicit FlipEvaluator(const BinaryPolynomial& p);

    std::size_t num_vars() const noexcept { return num_vars_; }

    /// Loads an assignment and recomputes the energy from scratch.
    void reset(std::span<const Bit> a);

    /// Energy change if variable v were flipped.
    double delta(VariableId v) const;

    /// Flips v and returns the energy change.
    double flip(VariableId v);

    double energy() const noexcept { return energy_; }
    const Assignment& bits() const noexcept { return bits_; }

    /// Terms (as indices into an internal array) touching v.
    std::size_t degree_of(VariableId v) const { return var_offsets_[v + 1] - var_offsets_[v]; }

private:
    std::size_t num_vars_ = 0;
    double constant_ = 0.0;
    std::vector<double> coeffs_;
    std::vector<std::size_t> term_offsets_;
    std::vector<VariableId> term_vars_;
    std::vector<std::size_t> var_offsets_;
    std::vector<std::uint32_t> var_terms_;

    Assignment bits_;
    std::vector<std::uint32_t> zeros_;
    double energy_ = 0.0;
};

void to_json(nlohmann::json& j, const BinaryPolynomial& p);
void from_json(const nlohmann::json& j, BinaryPolynomial& p);

}  // namespace truckloop
