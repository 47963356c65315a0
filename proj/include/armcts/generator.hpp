#pragma once

// Step-generator contract: one next step, or a full completion to a terminal
// answer (or the backend's depth cap). Deterministic given inputs and seed.

#include <cstdint>

#include "armcts/core.hpp"
#include "armcts/retrieval.hpp"

namespace armcts {

class GeneratorBackend {
 public:
  virtual ~GeneratorBackend() = default;

  // insight may be null (the no-insight branch).
  virtual ReasoningStep generate_step(const MultimodalQuery& query, const ReasoningPath& path,
                                      const Insight* insight, double temperature,
                                      std::uint64_t seed) const = 0;

  // Rolls the path out to a terminal step or the backend's own depth cap.
  // The optional insight conditions only the first generated step.
  virtual ReasoningPath generate_completion(const MultimodalQuery& query,
                                            const ReasoningPath& path, const Insight* insight,
                                            double temperature, std::uint64_t seed) const = 0;
};

}  // namespace armcts
