#pragma once

#include <string>
#include <vector>

#include "tommy/env.hpp"

namespace tommy {

struct AttentionDump;
struct MetricsReport;

namespace svg {

std::string render_world(const env::GridWorld& world);
std::string render_memory_attention(const AttentionDump& dump);
std::string render_current_attention(const AttentionDump& dump);

// Overlays one curve/bar set per report, so ToMMY vs ToMnet figures come out
// of two eval runs.
std::string render_pref_by_room(const std::vector<MetricsReport>& reports);
std::string render_action_groups(const std::vector<MetricsReport>& reports);
std::string render_sr_jsd(const std::vector<MetricsReport>& reports);

void write_file(const std::string& path, const std::string& content);

}  // namespace svg
}  // namespace tommy
