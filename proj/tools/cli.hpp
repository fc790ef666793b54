#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace featurecuts::cli {

/// Entry point shared by the binary and the tests. Exit codes: 0 success,
/// 1 usage error, 2 runtime failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Merges a subcommand's plot traces into long-format CSV text
/// (dataset,method,k,fss) sorted by dataset, method, k.
std::string merge_traces(const std::vector<std::string>& paths, const std::vector<std::string>& dataset_names);

}  // namespace featurecuts::cli
