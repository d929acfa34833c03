#include "greensec/tensor_io.hpp"

#include <fstream>
#include <sstream>

namespace greensec {

void TensorWriter::meta(const std::string& key, const std::string& value) {
  meta_.emplace_back(key, value);
}

void TensorWriter::tensor(const std::string& name, const Mat& m) {
  tensors_.emplace_back(name, m);
}

void TensorWriter::tensor(const std::string& name, const Vec& v) {
  Mat m(v.size(), 1);
  m.col(0) = v;
  tensors_.emplace_back(name, std::move(m));
}

std::string TensorWriter::str() const {
  std::ostringstream out;
  out << "greensec-tensors 1\n";
  for (const auto& [k, v] : meta_) out << "meta " << k << " " << v << "\n";
  for (const auto& [name, m] : tensors_) {
    out << "tensor " << name << " " << m.rows() << " " << m.cols() << "\n";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        out << (c ? " " : "") << format_double(m(r, c));
      out << "\n";
    }
  }
  return out.str();
}

void TensorWriter::write(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ArgumentError(path + ": cannot open file for writing");
  f << str();
  if (!f) throw ArgumentError(path + ": write failed");
}

TensorReader::TensorReader(const std::string& text, const std::string& name) : name_(name) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("greensec-tensors 1", 0) != 0)
    throw ArgumentError(name_ + ": not a greensec-tensors v1 file");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "meta") {
      std::string key;
      ls >> key;
      std::string value;
      std::getline(ls, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      meta_[key] = value;
    } else if (tag == "tensor") {
      std::string tname;
      Eigen::Index rows = 0, cols = 0;
      ls >> tname >> rows >> cols;
      if (tname.empty() || rows < 0 || cols < 0)
        throw ArgumentError(name_ + ": malformed tensor header: " + line);
      Mat m(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r) {
        if (!std::getline(in, line))
          throw ArgumentError(name_ + ": truncated tensor " + tname);
        std::istringstream vs(line);
        for (Eigen::Index c = 0; c < cols; ++c) {
          if (!(vs >> m(r, c)))
            throw ArgumentError(name_ + ": bad value in tensor " + tname + " row " +
                                std::to_string(r));
        }
      }
      tensors_[tname] = std::move(m);
    } else {
      throw ArgumentError(name_ + ": unexpected line: " + line);
    }
  }
}

TensorReader TensorReader::from_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ArgumentError(path + ": cannot open file");
  std::ostringstream ss;
  ss << f.rdbuf();
  return TensorReader(ss.str(), path);
}

bool TensorReader::has_meta(const std::string& key) const { return meta_.count(key) > 0; }

const std::string& TensorReader::meta(const std::string& key) const {
  auto it = meta_.find(key);
  if (it == meta_.end()) throw ArgumentError(name_ + ": missing meta key " + key);
  return it->second;
}

double TensorReader::meta_double(const std::string& key) const { return std::stod(meta(key)); }
int TensorReader::meta_int(const std::string& key) const { return std::stoi(meta(key)); }

bool TensorReader::has_tensor(const std::string& name) const { return tensors_.count(name) > 0; }

const Mat& TensorReader::tensor(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ArgumentError(name_ + ": missing tensor " + name);
  return it->second;
}

Vec TensorReader::tensor_vec(const std::string& name) const {
  const Mat& m = tensor(name);
  if (m.cols() != 1) throw ArgumentError(name_ + ": tensor " + name + " is not a vector");
  return m.col(0);
}

}  // namespace greensec
