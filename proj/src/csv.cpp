#include "calderon/csv.hpp"

#include <cstdio>
#include <stdexcept>

namespace calderon {

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& columns)
    : ncols_(columns.size()) {
  if (columns.empty()) throw std::invalid_argument("CsvWriter: no columns");
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("CsvWriter: cannot open " + path);
  fp_ = fp;
  for (size_t k = 0; k < columns.size(); ++k)
    std::fprintf(fp, "%s%s", columns[k].c_str(), k + 1 < columns.size() ? "," : "\n");
}

CsvWriter::~CsvWriter() {
  if (fp_) std::fclose((std::FILE*)fp_);
}

CsvWriter& CsvWriter::cell(double v) { return cell(format_g17(v)); }

CsvWriter& CsvWriter::cell(int v) { return cell(std::to_string(v)); }

CsvWriter& CsvWriter::cell(const std::string& v) {
  if (!fp_) throw std::runtime_error("CsvWriter: closed");
  if (col_ >= ncols_) throw std::runtime_error("CsvWriter: row has too many cells");
  std::fprintf((std::FILE*)fp_, "%s%s", v.c_str(), col_ + 1 < ncols_ ? "," : "");
  ++col_;
  return *this;
}

void CsvWriter::end_row() {
  if (!fp_) throw std::runtime_error("CsvWriter: closed");
  if (col_ != ncols_) throw std::runtime_error("CsvWriter: row has too few cells");
  std::fprintf((std::FILE*)fp_, "\n");
  col_ = 0;
}

void CsvWriter::close() {
  if (fp_) {
    if (std::fclose((std::FILE*)fp_) != 0) {
      fp_ = nullptr;
      throw std::runtime_error("CsvWriter: close failed");
    }
    fp_ = nullptr;
  }
}

}  // namespace calderon
