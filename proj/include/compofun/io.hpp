#pragma once

#include <string>

#include "compofun/dag.hpp"
#include "compofun/features.hpp"

namespace cf {

/// Strict JSON form: {d, q, R, nodes:[{id, kind, primitive, params, layer,
/// inputs:[{src, slot}], R_ij, m_ij}]}.  Unknown fields are rejected.
CompositionalFunction parse_dag(const std::string& text);
std::string dag_to_json(const CompositionalFunction& f);

/// parse_dag plus a structural validation pass; load o save is the identity
/// up to field ordering.
CompositionalFunction load_dag(const std::string& path);
void save_dag(const CompositionalFunction& f, const std::string& path);

std::string features_to_json(const Features& ft);
/// Header row plus one row per general node.
std::string features_to_csv(const Features& ft);

}  // namespace cf
