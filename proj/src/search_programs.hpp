#pragma once

// Translation between the factorization shapes and engine programs.
// Factor order in a crib program:   source, p_t, enc2, enc1, channel, decoder.
// Factor order in a no-crib program: source, p_t, aux1, input1, aux2, input2,
//                                    link1, link2, decoder.

#include <vector>

#include "cribcoord/regions.hpp"
#include "cribcoord/search_engine.hpp"

namespace cribcoord::detail {

engine::ProgramSpec make_program(const SearchProblem& problem, Mode mode, std::size_t u1_size,
                                 std::size_t u2_size, std::size_t t_size);

Factorization to_factorization(const SearchProblem& problem, Mode mode, const engine::ProgramSpec& spec,
                               const std::vector<std::vector<double>>& tables);

/// lhs - rhs of every structural bound.
std::vector<InfoExpr> structural_exprs(const std::vector<NamedBound>& bounds);
/// rhs of every bound of the given kind.
std::vector<InfoExpr> rate_exprs(const std::vector<NamedBound>& bounds, NamedBound::Kind kind);

engine::SolverSettings solver_settings(const SearchConfig& cfg);

}  // namespace cribcoord::detail
