#pragma once

#include <vector>

#include "sbr/datamodel.hpp"

namespace sbr {

// Full quantile-matching repair to the midpoint of the two s-conditional
// quantile functions, per u. Only members of the fitted sample can be
// repaired.
struct QuantileRepairModel {
    PerSubgroup<std::vector<double>> sorted;
};

// Throws InsufficientSupportError when a subgroup is empty.
QuantileRepairModel fit_geometric(const ResearchDataset& data);

// Empirical quantile with linear interpolation between order statistics,
// order statistic i sitting at probability (i + 0.5) / n.
double empirical_quantile(const std::vector<double>& sorted, double r);

// Throws OffSampleUnsupportedError when x is not in the fitted (u,s) sample.
double repair_geometric(const QuantileRepairModel& model, const LabelledDatum& datum);

ResearchDataset repair_geometric(const QuantileRepairModel& model, const ResearchDataset& data);

}  // namespace sbr
