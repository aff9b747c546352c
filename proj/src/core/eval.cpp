#include <fstream>
#include <iomanip>
#include <system_error>

#include "degradelab/degrade.hpp"
#include "degradelab/error.hpp"
#include "degradelab/trainer.hpp"

namespace degradelab {

EvalReport eval_protocols(const ImageFn* down, const ImageFn* sr,
                          std::span<const Image> test_hr,
                          std::span<const std::string> names,
                          const Kernel2D& gt_kernel, int scale, int border_hr) {
  if (scale < 1) throw_invalid("scale must be positive");
  if (!names.empty() && names.size() != test_hr.size()) {
    throw_invalid("image names do not match the test set");
  }
  if (border_hr < 0) border_hr = gt_kernel.size() / 2;
  const int border_lr = (border_hr + scale - 1) / scale;

  EvalReport report;
  double sum_down = 0.0, sum_sr = 0.0, sum_bic = 0.0;
  for (std::size_t i = 0; i < test_hr.size(); ++i) {
    const Image& raw = test_hr[i];
    const Image hr = crop_to_multiple(
        raw.domain == ValueDomain::Byte ? normalize(raw) : raw, scale);
    const Image hr_byte = to_byte(hr);
    const Image lr_byte = to_byte(degrade(hr, gt_kernel, scale));
    const Image lr_q = normalize(lr_byte);

    EvalRow row;
    row.image = names.empty() ? std::to_string(i) : names[i];
    if (down) {
      row.psnr_down = psnr_rgb(to_byte((*down)(hr)), lr_byte, border_lr);
      sum_down += *row.psnr_down;
    }
    if (sr) {
      row.psnr_sr = psnr_rgb(to_byte((*sr)(lr_q)), hr_byte, border_hr);
      sum_sr += *row.psnr_sr;
    }
    row.psnr_bicubic =
        psnr_rgb(to_byte(upsample_bicubic(lr_q, scale)), hr_byte, border_hr);
    sum_bic += row.psnr_bicubic;
    report.rows.push_back(std::move(row));
  }
  const double n = report.rows.empty() ? 1.0 : report.rows.size();
  report.mean.image = "mean";
  if (down) report.mean.psnr_down = sum_down / n;
  if (sr) report.mean.psnr_sr = sum_sr / n;
  report.mean.psnr_bicubic = sum_bic / n;
  return report;
}

void EvalReport::write_csv(const std::filesystem::path& path) const {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw_io("cannot write " + path.string());
  out << "image,psnr_down,psnr_sr,psnr_bicubic\n" << std::fixed
      << std::setprecision(4);
  auto emit = [&out](const EvalRow& r) {
    out << r.image << ',';
    if (r.psnr_down) out << *r.psnr_down;
    out << ',';
    if (r.psnr_sr) out << *r.psnr_sr;
    out << ',' << r.psnr_bicubic << '\n';
  };
  for (const auto& r : rows) emit(r);
  emit(mean);
}

}  // namespace degradelab
