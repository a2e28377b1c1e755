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

#include "truckloop/binpoly.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>
#include <string>
#include <unordered_map>

#include "truckloop/errors.hpp"
#include "truckloop/json_util.hpp"

namespace truckloop {

void BinaryPolynomial::add_term(std::span<const VariableId> vars, double coeff) {
    Monomial m(vars.begin(), vars.end());
    std::sort(m.begin(), m.end());
    m.erase(std::unique(m.begin(), m.end()), m.end());
    if (!m.empty()) num_vars_ = std::max<std::size_t>(num_vars_, m.back() + 1);
    if (coeff == 0.0) return;

    auto [it, inserted] = terms_.try_emplace(std::move(m), coeff);
    if (!inserted) {
        it->second += coeff;
        if (it->second == 0.0) terms_.erase(it);
    }
}

void BinaryPolynomial::reserve_vars(std::size_t num_vars) {
    num_vars_ = std::max(num_vars_, num_vars);
}

std::size_t BinaryPolynomial::degree() const noexcept {
    std::size_t d = 0;
    for (const auto& [m, c] : terms_) d = std::max(d, m.size());
    return d;
}

double BinaryPolynomial::coefficient(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? 0.0 : it->second;
}

double BinaryPolynomial::abs_coefficient_sum() const noexcept {
    double s = 0.0;
    for (const auto& [m, c] : terms_) s += std::abs(c);
    return s;
}

double BinaryPolynomial::max_abs_coefficient() const noexcept {
    double s = 0.0;
    for (const auto& [m, c] : terms_) {
        if (!m.empty()) s = std::max(s, std::abs(c));
    }
    return s;
}

double BinaryPolynomial::evaluate(std::span<const Bit> a) const {
    if (a.size() != num_vars_) {
        throw DimensionError("assignment has " + std::to_string(a.size()) +
                             " bits, polynomial has " + std::to_string(num_vars_) + " variables");
    }
    double total = 0.0;
    for (const auto& [m, c] : terms_) {
        bool on = true;
        for (VariableId v : m) {
            if (!a[v]) {
                on = false;
                break;
            }
        }
        if (on) total += c;
    }
    return total;
}

BinaryPolynomial& BinaryPolynomial::operator*=(double c) {
    if (c == 0.0) {
        terms_.clear();
        return *this;
    }
    for (auto& [m, coeff] : terms_) coeff *= c;
    return *this;
}

BinaryPolynomial add_scaled(const BinaryPolynomial& p, const BinaryPolynomial& q, double c) {
    BinaryPolynomial r = p;
    r.reserve_vars(q.num_vars());
    if (c == 0.0) return r;
    for (const auto& [m, coeff] : q.terms()) r.add_term(m, c * coeff);
    return r;
}

// ---------------------------------------------------------------------------
// Order reduction

Assignment QuadraticReduction::project(std::span<const Bit> a) const {
    if (a.size() < original_num_vars) {
        throw DimensionError("assignment shorter than the original variable count");
    }
    return Assignment(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(original_num_vars));
}

Assignment QuadraticReduction::lift(std::span<const Bit> a) const {
    if (a.size() != original_num_vars) {
        throw DimensionError("assignment does not match the original variable count");
    }
    Assignment full(qubo.num_vars(), 0);
    std::copy(a.begin(), a.end(), full.begin());
    for (const auto& s : var_map) full[s.aux] = full[s.left] & full[s.right];
    return full;
}

double auto_reduction_penalty(const BinaryPolynomial& p) {
    return 1.0 + 2.0 * p.abs_coefficient_sum();
}

namespace {

using PairKey = std::uint64_t;

PairKey pair_key(VariableId u, VariableId v) {
    if (u > v) std::swap(u, v);
    return (static_cast<PairKey>(u) << 32) | v;
}

// Tracks how many high-degree monomials contain each variable pair, with the
// most frequent (then smallest) pair available in O(log n).
class PairCounter {
public:
    void add(const Monomial& m, std::uint32_t term, int sign) {
        for (std::size_t i = 0; i < m.size(); ++i) {
            for (std::size_t j = i + 1; j < m.size(); ++j) {
                const PairKey k = pair_key(m[i], m[j]);
                int& c = count_[k];
                if (c > 0) order_.erase({-c, k});
                c += sign;
                if (c > 0) order_.insert({-c, k});
                if (sign > 0) members_[k].push_back(term);
            }
        }
    }

    bool empty() const { return order_.empty(); }
    PairKey top() const { return order_.begin()->second; }
    const std::vector<std::uint32_t>& members(PairKey k) { return members_[k]; }

private:
    std::unordered_map<PairKey, int> count_;
    std::set<std::pair<int, PairKey>> order_;
    // May hold stale term ids; callers re-check membership.
    std::unordered_map<PairKey, std::vector<std::uint32_t>> members_;
};

}  // namespace

QuadraticReduction reduce_to_quadratic(const BinaryPolynomial& p, std::optional<double> penalty) {
    if (penalty && !(*penalty > 0.0)) {
        throw ParameterError("reduction penalty must be positive");
    }
    QuadraticReduction out;
    out.original_num_vars = p.num_vars();
    out.penalty = penalty ? *penalty : auto_reduction_penalty(p);
    out.qubo = BinaryPolynomial(p.num_vars());

    std::vector<Monomial> high;
    std::vector<double> high_coeff;
    for (const auto& [m, c] : p.terms()) {
        if (m.size() <= 2) {
            out.qubo.add_term(m, c);
        } else {
            high.push_back(m);
            high_coeff.push_back(c);
        }
    }
    if (high.empty()) return out;

    PairCounter counter;
    for (std::uint32_t t = 0; t < high.size(); ++t) counter.add(high[t], t, +1);

    auto next_aux = static_cast<VariableId>(p.num_vars());
    while (!counter.empty()) {
        const PairKey key = counter.top();
        const auto u = static_cast<VariableId>(key >> 32);
        const auto v = static_cast<VariableId>(key & 0xffffffffu);
        const VariableId a = next_aux++;
        out.var_map.push_back({a, u, v});

        // Copy: add() below appends to member lists.
        const std::vector<std::uint32_t> touched = counter.members(key);
        for (std::uint32_t t : touched) {
            Monomial& m = high[t];
            if (m.size() < 3) continue;
            const bool has_u = std::binary_search(m.begin(), m.end(), u);
            const bool has_v = std::binary_search(m.begin(), m.end(), v);
            if (!has_u || !has_v) continue;
            counter.add(m, t, -1);
            std::erase_if(m, [&](VariableId x) { return x == u || x == v; });
            m.push_back(a);  // a exceeds every existing id, so m stays sorted
            if (m.size() >= 3) counter.add(m, t, +1);
        }
    }

    for (std::size_t t = 0; t < high.size(); ++t) out.qubo.add_term(high[t], high_coeff[t]);

    const double lam = out.penalty;
    for (const auto& s : out.var_map) {
        out.qubo.add_term({s.left, s.right}, lam);
        out.qubo.add_term({s.left, s.aux}, -2.0 * lam);
        out.qubo.add_term({s.right, s.aux}, -2.0 * lam);
        out.qubo.add_term({s.aux}, 3.0 * lam);
    }
    out.qubo.reserve_vars(next_aux);
    return out;
}

// ---------------------------------------------------------------------------
// Exhaustive minimization

Minimum brute_force_minimize(const BinaryPolynomial& p, std::size_t max_vars) {
    const std::size_t n = p.num_vars();
    if (n > max_vars) {
        throw SizeError("brute force limited to " + std::to_string(max_vars) + " variables, got " +
                        std::to_string(n));
    }
    if (n >= 63) throw SizeError("brute force variable count out of range");

    FlipEvaluator eval(p);
    Assignment current(n, 0);
    eval.reset(current);

    const double tie = 1e-12 * std::max(1.0, p.abs_coefficient_sum());
    Assignment best = eval.bits();
    double best_e = eval.energy();

    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t i = 1; i < total; ++i) {
        const auto v = static_cast<VariableId>(std::countr_zero(i));
        eval.flip(v);
        const double e = eval.energy();
        if (e < best_e - tie) {
            best_e = e;
            best = eval.bits();
        } else if (e <= best_e + tie && eval.bits() < best) {
            best_e = std::min(best_e, e);
            best = eval.bits();
        }
    }
    return {best, p.evaluate(best)};
}

// ---------------------------------------------------------------------------
// FlipEvaluator

FlipEvaluator::FlipEvaluator(const BinaryPolynomial& p) : num_vars_(p.num_vars()) {
    term_offsets_.push_back(0);
    std::vector<std::size_t> var_deg(num_vars_, 0);
    for (const auto& [m, c] : p.terms()) {
        if (m.empty()) {
            constant_ += c;
            continue;
        }
        coeffs_.push_back(c);
        for (VariableId v : m) {
            term_vars_.push_back(v);
            ++var_deg[v];
        }
        term_offsets_.push_back(term_vars_.size());
    }

    var_offsets_.assign(num_vars_ + 1, 0);
    for (std::size_t v = 0; v < num_vars_; ++v) var_offsets_[v + 1] = var_offsets_[v] + var_deg[v];
    var_terms_.resize(var_offsets_.back());
    std::vector<std::size_t> fill(var_offsets_.begin(), var_offsets_.end() - 1);
    for (std::uint32_t t = 0; t < coeffs_.size(); ++t) {
        for (std::size_t k = term_offsets_[t]; k < term_offsets_[t + 1]; ++k) {
            var_terms_[fill[term_vars_[k]]++] = t;
        }
    }
    bits_.assign(num_vars_, 0);
    zeros_.assign(coeffs_.size(), 0);
}

void FlipEvaluator::reset(std::span<const Bit> a) {
    if (a.size() != num_vars_) throw DimensionError("assignment length mismatch");
    bits_.assign(a.begin(), a.end());
    energy_ = constant_;
    for (std::size_t t = 0; t < coeffs_.size(); ++t) {
        std::uint32_t z = 0;
        for (std::size_t k = term_offsets_[t]; k < term_offsets_[t + 1]; ++k) z += bits_[term_vars_[k]] ? 0 : 1;
        zeros_[t] = z;
        if (z == 0) energy_ += coeffs_[t];
    }
}

double FlipEvaluator::delta(VariableId v) const {
    double d = 0.0;
    const std::size_t lo = var_offsets_[v], hi = var_offsets_[v + 1];
    if (bits_[v]) {
        for (std::size_t k = lo; k < hi; ++k) {
            const auto t = var_terms_[k];
            if (zeros_[t] == 0) d -= coeffs_[t];
        }
    } else {
        for (std::size_t k = lo; k < hi; ++k) {
            const auto t = var_terms_[k];
            if (zeros_[t] == 1) d += coeffs_[t];
        }
    }
    return d;
}

double FlipEvaluator::flip(VariableId v) {
    double d = 0.0;
    const std::size_t lo = var_offsets_[v], hi = var_offsets_[v + 1];
    if (bits_[v]) {
        for (std::size_t k = lo; k < hi; ++k) {
            const auto t = var_terms_[k];
            if (zeros_[t]++ == 0) d -= coeffs_[t];
        }
    } else {
        for (std::size_t k = lo; k < hi; ++k) {
            const auto t = var_terms_[k];
            if (--zeros_[t] == 0) d += coeffs_[t];
        }
    }
    bits_[v] ^= 1;
    energy_ += d;
    return d;
}

// ---------------------------------------------------------------------------
// JSON

void to_json(nlohmann::json& j, const BinaryPolynomial& p) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& [m, c] : p.terms()) terms.push_back({{"vars", m}, {"coeff", c}});
    j = nlohmann::json{{"num_vars", p.num_vars()}, {"terms", std::move(terms)}};
}

void from_json(const nlohmann::json& j, BinaryPolynomial& p) {
    if (!j.is_object()) throw ParseError("polynomial: expected an object");
    if (!j.contains("num_vars") || !is_index(j.at("num_vars"))) {
        throw ParseError("polynomial: missing or invalid field 'num_vars'");
    }
    if (!j.contains("terms") || !j.at("terms").is_array()) {
        throw ParseError("polynomial: missing or invalid field 'terms'");
    }
    const auto n = j.at("num_vars").get<std::size_t>();
    BinaryPolynomial out(n);
    for (const auto& t : j.at("terms")) {
        if (!t.is_object() || !t.contains("vars") || !t.at("vars").is_array()) {
            throw ParseError("polynomial: term missing field 'vars'");
        }
        if (!t.contains("coeff") || !t.at("coeff").is_number()) {
            throw ParseError("polynomial: term missing field 'coeff'");
        }
        std::vector<VariableId> vars;
        for (const auto& v : t.at("vars")) {
            if (!is_index(v) || v.get<std::uint64_t>() >= n) {
                throw ParseError("polynomial: term 'vars' entry out of range");
            }
            vars.push_back(v.get<VariableId>());
        }
        out.add_term(vars, t.at("coeff").get<double>());
    }
    p = std::move(out);
}

}  // namespace truckloop
