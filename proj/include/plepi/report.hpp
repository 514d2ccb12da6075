#pragma once

#include "plepi/metrics.hpp"

#include <string>
#include <string_view>

namespace plepi {

enum class ReportFormat { Json, Text };

/// JSON (fixed schema version) or a human-readable table. Undefined metrics
/// are written as null and listed under "undefined".
std::string emit_report(const MetricsReport& rep, ReportFormat format);

MetricsReport report_from_json(std::string_view text);

/// Called vs reference spot counts, one circle per targeted barcode.
std::string abundance_scatter_svg(const MetricsReport& rep);

/// Held-out accuracy per self-training round.
std::string accuracy_curve_svg(const MetricsReport& rep);

}  // namespace plepi
