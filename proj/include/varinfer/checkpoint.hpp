#pragma once

#include <iosfwd>
#include <string>

#include "varinfer/network.hpp"

namespace varinfer {

/// Text checkpoint of one network:
///
///   varinfer-network 1
///   layers <count>
///   layer <in> <out> <activation>
///   weights <in*out values, row-major>
///   bias <out values>
///   ... (one layer/weights/bias triple per layer)
///
/// Values are written with 17 significant digits so a reload is bit-exact.
void write_network(std::ostream& out, const Network& net);

/// Throws ArgumentError on malformed input.
Network read_network(std::istream& in);

/// "%.17g" rendering shared by every text artifact.
std::string format_double(double v);

/// Reads the next whitespace token and checks it equals `expected`.
void expect_token(std::istream& in, const std::string& expected);

}  // namespace varinfer
