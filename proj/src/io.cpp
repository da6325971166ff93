#include "curvefuse/io.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "curvefuse/version.hpp"

namespace curvefuse {

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string fnv1a_digest(const std::string& content) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : content) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::string file_digest(const std::filesystem::path& path) { return fnv1a_digest(read_file(path)); }

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw DataError("config line " + std::to_string(lineno) + ": empty key");
    out[key] = value;
  }
  return out;
}

std::map<std::string, std::string> load_config_file(const std::filesystem::path& path) {
  return parse_key_values(read_file(path));
}

std::vector<std::string> split_csv_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string long_csv(const FunctionalDataset& data) {
  std::ostringstream os;
  os << "subject,replicate,time,value\n";
  for (int i = 0; i < data.n_subjects(); ++i) {
    const Matrix& w = data.observations[static_cast<std::size_t>(i)];
    for (int r = 0; r < data.n_replicates(); ++r)
      for (int k = 0; k < data.grid_size(); ++k)
        os << data.subject_ids[static_cast<std::size_t>(i)] << ',' << (r + 1) << ','
           << format_double(data.grid[k]) << ',' << format_double(w(r, k)) << '\n';
  }
  return os.str();
}

std::string membership_csv(const std::vector<std::string>& ids, const std::vector<int>& labels) {
  if (ids.size() != labels.size())
    throw std::invalid_argument("membership_csv: ids and labels differ in length");
  std::ostringstream os;
  os << "subject,cluster\n";
  for (std::size_t i = 0; i < ids.size(); ++i) os << ids[i] << ',' << labels[i] << '\n';
  return os.str();
}

std::map<std::string, int> read_membership_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty membership file: " + path.string());
  if (trim(line) != "subject,cluster")
    throw DataError(path.string() + ": expected header 'subject,cluster'");
  std::map<std::string, int> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw DataError(path.string() + " line " + std::to_string(lineno) + ": expected subject,cluster");
    std::string subject = trim(line.substr(0, comma));
    std::string label = trim(line.substr(comma + 1));
    try {
      std::size_t used = 0;
      int value = std::stoi(label, &used);
      if (used != label.size()) throw std::invalid_argument(label);
      if (!out.emplace(subject, value).second)
        throw DataError(path.string() + " line " + std::to_string(lineno) + ": duplicate subject '" +
                        subject + "'");
      continue;
    } catch (const DataError&) {
      throw;
    } catch (const std::exception&) {
      throw DataError(path.string() + " line " + std::to_string(lineno) +
                      ": cluster label is not an integer: '" + label + "'");
    }
  }
  if (out.empty()) throw DataError("no rows in membership file: " + path.string());
  return out;
}

std::string RunManifest::render(bool include_timestamp) const {
  std::ostringstream os;
  os << "command: " << command << '\n';
  os << "version: " << (version.empty() ? kVersion : version) << '\n';
  os << "seed: " << seed << '\n';
  if (include_timestamp) {
    const auto now = std::chrono::system_clock::now();
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch());
    os << "timestamp_unix: " << secs.count() << '\n';
  }
  for (const auto& [k, v] : config) os << "config." << k << ": " << v << '\n';
  for (const auto& [k, v] : inputs) os << "input." << k << ": " << v << '\n';
  for (const auto& [k, v] : outputs) os << "output." << k << ": " << v << '\n';
  return os.str();
}

}  // namespace curvefuse
