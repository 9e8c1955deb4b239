#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace betarce {

/// Runs one command line. Results go to `out`; failures print a single JSON
/// object {"error": code, "message": text} to `err`. Returns 0 on success,
/// 2 on usage errors and 1 on any other failure.
int cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cli(int argc, char** argv);

/// Parses "1..124", "12..124:8" and comma lists of those into integers.
std::vector<int> parse_int_list(const std::string& spec);
std::vector<double> parse_double_list(const std::string& spec);

}  // namespace betarce
