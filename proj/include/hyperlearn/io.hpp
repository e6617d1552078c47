#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "hyperlearn/factor_set.hpp"
#include "hyperlearn/graph.hpp"
#include "hyperlearn/mgcnn.hpp"
#include "hyperlearn/sptensor.hpp"
#include "hyperlearn/types.hpp"

namespace hyperlearn::io {

// Relation file:
//   #dims N_1 .. N_K [observed|full]
//   i_1 <tab> .. <tab> i_K <tab> value        (0-based)
void write_relation(std::ostream& os, const SparseTensor& x);
SparseTensor read_relation(std::istream& is, const std::string& source = "<relation>");

// Graph file:
//   #nodes n
//   i <tab> j [<tab> weight]                  (each undirected edge once)
void write_graph(std::ostream& os, const IntraGraph& g);
IntraGraph read_graph(std::istream& is, const std::string& source = "<graph>");

// Feature file: one row per node, tab-separated reals.
void write_features(std::ostream& os, const Matrix& features);
Matrix read_features(std::istream& is, const std::string& source = "<features>");

// Factor checkpoint:
//   #factors K R
//   #mode m N_m        followed by N_m rows of R reals, per mode
void write_factors(std::ostream& os, const FactorSet& fs);
FactorSet read_factors(std::istream& is, const std::string& source = "<factors>");

// Model checkpoint:
//   #mgcnn <filters> <cells> <unroll> <learning_rate> <clip_norm>
//   #param <name> <rows> <cols>   followed by the rows, per parameter tensor
void write_model(std::ostream& os, const MGCNNModel& model);
MGCNNModel read_model(std::istream& is, const std::string& source = "<model>");

// Path-based wrappers; throw InvalidArgument when the file cannot be opened.
void save_relation(const std::filesystem::path& p, const SparseTensor& x);
SparseTensor load_relation(const std::filesystem::path& p);
void save_graph(const std::filesystem::path& p, const IntraGraph& g);
IntraGraph load_graph(const std::filesystem::path& p);
Matrix load_features(const std::filesystem::path& p);
void save_factors(const std::filesystem::path& p, const FactorSet& fs);
FactorSet load_factors(const std::filesystem::path& p);
void save_model(const std::filesystem::path& p, const MGCNNModel& model);
MGCNNModel load_model(const std::filesystem::path& p);

std::string read_text(const std::filesystem::path& p);
void write_text(const std::filesystem::path& p, const std::string& content);

}  // namespace hyperlearn::io
