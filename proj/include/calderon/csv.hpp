#ifndef CALDERON_CSV_HPP
#define CALDERON_CSV_HPP

#include <string>
#include <vector>

namespace calderon {

/// CSV writer with deterministic formatting: floats at 17 significant
/// digits (%.17g), no timestamps, fixed column order.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  CsvWriter& cell(double v);
  CsvWriter& cell(int v);
  CsvWriter& cell(const std::string& v);
  void end_row();
  void close();

 private:
  void* fp_ = nullptr;
  size_t ncols_;
  size_t col_ = 0;
};

std::string format_g17(double v);

}  // namespace calderon

#endif
