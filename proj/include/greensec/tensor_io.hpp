#pragma once

#include <map>
#include <string>
#include <vector>

#include "greensec/common.hpp"

namespace greensec {

// Shape-tagged text tensor container used for policy checkpoints.
//
//   greensec-tensors 1
//   meta <key> <value>
//   tensor <name> <rows> <cols>
//   <rows lines of cols space-separated doubles>
//
// Values are written with round-trippable precision; loading reproduces the
// saved doubles bit-exactly.

class TensorWriter {
 public:
  void meta(const std::string& key, const std::string& value);
  void meta(const std::string& key, double value) { meta(key, format_double(value)); }
  void meta(const std::string& key, int value) { meta(key, std::to_string(value)); }
  void tensor(const std::string& name, const Mat& m);
  void tensor(const std::string& name, const Vec& v);
  void write(const std::string& path) const;
  std::string str() const;

 private:
  std::vector<std::pair<std::string, std::string>> meta_;
  std::vector<std::pair<std::string, Mat>> tensors_;
};

class TensorReader {
 public:
  explicit TensorReader(const std::string& text, const std::string& name = "tensors");
  static TensorReader from_file(const std::string& path);

  bool has_meta(const std::string& key) const;
  const std::string& meta(const std::string& key) const;
  double meta_double(const std::string& key) const;
  int meta_int(const std::string& key) const;

  bool has_tensor(const std::string& name) const;
  const Mat& tensor(const std::string& name) const;
  Vec tensor_vec(const std::string& name) const;

 private:
  std::string name_;
  std::map<std::string, std::string> meta_;
  std::map<std::string, Mat> tensors_;
};

}  // namespace greensec
