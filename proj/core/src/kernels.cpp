#include "relembed/kernels.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "relembed/error.hpp"

namespace relembed {

double kernel_eval(const KernelSpec& spec, const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) throw SchemaError("kernel evaluated on a Null value");
  switch (spec.kind) {
    case KernelKind::kCategoricalEquality:
      if (a.tag() != Value::Tag::kCategorical || b.tag() != Value::Tag::kCategorical) {
        throw SchemaError("categorical kernel applied to a non-categorical value");
      }
      return a.str() == b.str() ? 1.0 : 0.0;
    case KernelKind::kTextEquality:
      if (a.tag() != Value::Tag::kText || b.tag() != Value::Tag::kText) {
        throw SchemaError("text kernel applied to a non-text value");
      }
      return a.str() == b.str() ? 1.0 : 0.0;
    case KernelKind::kNumericGaussian: {
      if (!a.is_numeric() || !b.is_numeric()) throw SchemaError("gaussian kernel applied to a non-numeric value");
      const double d = a.number() - b.number();
      return std::exp(-(d * d) / (2.0 * spec.sigma * spec.sigma));
    }
  }
  return 0.0;
}

KernelSet KernelSet::defaults(const Database& db) {
  KernelSet set;
  const auto& schema = db.schema();
  for (RelationId r = 0; r < schema.relations().size(); ++r) {
    const auto& rel = schema.relation(r);
    for (AttrId a = 0; a < rel.attributes.size(); ++a) {
      KernelSpec spec{r, a, KernelKind::kCategoricalEquality, 1.0};
      switch (rel.attributes[a].kind) {
        case DomainKind::kCategorical: break;
        case DomainKind::kText: spec.kind = KernelKind::kTextEquality; break;
        case DomainKind::kNumeric: {
          spec.kind = KernelKind::kNumericGaussian;
          auto domain = active_domain(db, rel.name, rel.attributes[a].name);
          if (domain.size() >= 2) {
            double mean = 0.0;
            for (const auto& v : domain) mean += v.number();
            mean /= static_cast<double>(domain.size());
            double ss = 0.0;
            for (const auto& v : domain) ss += (v.number() - mean) * (v.number() - mean);
            const double sd = std::sqrt(ss / static_cast<double>(domain.size() - 1));
            if (std::isfinite(sd) && sd > 0.0) spec.sigma = sd;
          }
          break;
        }
      }
      set.set(spec);
    }
  }
  return set;
}

void KernelSet::apply_overrides(const DatabaseSchema& schema, const nlohmann::json& overrides) {
  for (const auto& o : overrides) {
    KernelSpec spec;
    spec.relation = schema.relation_id(o.at("relation").get<std::string>());
    spec.attr = schema.relation(spec.relation).attribute(o.at("attribute").get<std::string>());
    const auto kind = o.at("kind").get<std::string>();
    const auto domain = schema.relation(spec.relation).attributes[spec.attr].kind;
    if (kind == "categorical-equality" || kind == "categorical") {
      spec.kind = KernelKind::kCategoricalEquality;
    } else if (kind == "text-equality" || kind == "text") {
      spec.kind = KernelKind::kTextEquality;
    } else if (kind == "numeric-gaussian" || kind == "gaussian") {
      spec.kind = KernelKind::kNumericGaussian;
      spec.sigma = o.value("sigma", get(spec.relation, spec.attr).sigma);
      if (!(spec.sigma > 0.0)) throw SchemaError("gaussian kernel needs sigma > 0");
    } else {
      throw SchemaError("unknown kernel kind '" + kind + "'");
    }
    const bool compatible = (spec.kind == KernelKind::kCategoricalEquality && domain == DomainKind::kCategorical) ||
                            (spec.kind == KernelKind::kTextEquality && domain == DomainKind::kText) ||
                            (spec.kind == KernelKind::kNumericGaussian && domain == DomainKind::kNumeric);
    if (!compatible) throw SchemaError("kernel kind '" + kind + "' does not fit the attribute's domain");
    set(spec);
  }
}

const KernelSpec& KernelSet::get(RelationId rel, AttrId attr) const {
  auto it = specs_.find({rel, attr});
  if (it == specs_.end()) throw SchemaError("no kernel configured for attribute");
  return it->second;
}

const KernelSpec& KernelSet::for_target(const DatabaseSchema& schema, const TargetedWalkScheme& tws) const {
  return get(end_relation(schema, tws.scheme), tws.target);
}

double kd_exact(const Database& db, FactId f, FactId f2, const TargetedWalkScheme& tws, const KernelSpec& spec) {
  const auto p = exact_target_distribution(db, f, tws);
  const auto q = exact_target_distribution(db, f2, tws);
  if (p.empty() || q.empty()) throw NumericError("expected kernel value undefined: empty destination support");
  double sum = 0.0;
  for (const auto& [g, pg] : p) {
    for (const auto& [h, qh] : q) {
      sum += pg * qh * kernel_eval(spec, db.value(g, tws.target), db.value(h, tws.target));
    }
  }
  return std::clamp(sum, 0.0, 1.0);
}

KDEstimate kd_mc(const Database& db, FactId f, FactId f2, const TargetedWalkScheme& tws, const KernelSpec& spec,
                 std::size_t n, Rng& rng, std::size_t retry_cap) {
  if (n == 0) throw SchemaError("kd_mc needs n >= 1");
  double mean = 0.0, m2 = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto g = sample_target_destination(db, f, tws, rng, retry_cap);
    auto h = sample_target_destination(db, f2, tws, rng, retry_cap);
    if (!g || !h) continue;
    const double k = kernel_eval(spec, db.value(*g, tws.target), db.value(*h, tws.target));
    ++count;
    const double delta = k - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (k - mean);
  }
  if (count == 0) throw NumericError("kd_mc: every sampled pair dead-ended");
  KDEstimate est;
  est.value = mean;
  est.n_pairs = count;
  est.std_error = count > 1 ? std::sqrt(m2 / static_cast<double>(count - 1)) / std::sqrt(static_cast<double>(count)) : 0.0;
  return est;
}

}  // namespace relembed
