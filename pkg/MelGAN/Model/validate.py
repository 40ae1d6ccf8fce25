"""
Structural checks of the generator layout.
"""
from dataclasses import dataclass, field

from MelGAN.Model.params import count_parameters

KERNEL_NOT_MULTIPLE = 'kernel not multiple of stride'
DILATION_NOT_POWER = 'dilation not power of kernel'

__all__ = ['ArchReport', 'Violation', 'receptive_field', 'validate_checkerboard_free', 'count_parameters',
           'plan_parameter_count', 'KERNEL_NOT_MULTIPLE', 'DILATION_NOT_POWER']


def receptive_field(kernel, dilations):
    """
    Receptive field of one residual stack, ``1 + sum((kernel - 1) * d)``; 1x1 convs add nothing.
    :param kernel: dilated conv kernel size (odd)
    :type kernel: int
    :param dilations: dilation of each block
    :type dilations: list
    :rtype: int
    """
    return 1 + sum((kernel - 1) * d for d in dilations)


@dataclass(frozen=True)
class Violation:
    layer: str
    rule: str
    detail: str

    def __str__(self):
        return self.layer + ': ' + self.rule + ' (' + self.detail + ')'


@dataclass
class ArchReport:
    violations: list = field(default_factory=list)
    receptive_field: int = 1

    @property
    def passed(self):
        return not self.violations

    def rules(self):
        return sorted({v.rule for v in self.violations})

    def to_dict(self):
        return {'status': 'PASS' if self.passed else 'FAIL',
                'receptive_field': self.receptive_field,
                'violations': [{'layer': v.layer, 'rule': v.rule, 'detail': v.detail} for v in self.violations]}


def validate_checkerboard_free(cfg):
    """
    Report-only check of the two artifact-avoidance rules: every transposed conv
    kernel is a multiple of its stride, and the residual dilations run
    ``kernel**0, kernel**1, ...``.
    :type cfg: GeneratorConfig
    :rtype: ArchReport
    """
    report = ArchReport(receptive_field=receptive_field(cfg.resblock_kernel, cfg.resblock_dilations))
    for stage, (ratio, kernel) in enumerate(zip(cfg.upsample_ratios, cfg.upsample_kernels())):
        if kernel % ratio:
            report.violations.append(Violation('up.' + str(stage), KERNEL_NOT_MULTIPLE,
                                               'kernel ' + str(kernel) + ', stride ' + str(ratio)))
    expected = [cfg.resblock_kernel ** i for i in range(len(cfg.resblock_dilations))]
    if list(cfg.resblock_dilations) != expected:
        report.violations.append(Violation('res', DILATION_NOT_POWER,
                                           'dilations ' + str(list(cfg.resblock_dilations))
                                           + ', expected ' + str(expected)))
    return report


def plan_parameter_count(specs, norm=True):
    """
    Parameter count of a list of ``ConvSpec`` without allocating weights.
    :param norm: whether each layer carries a weight-norm gain vector
    :rtype: int
    """
    total = 0
    for spec in specs:
        shape = spec.weight_shape
        total += shape[0] * shape[1] * shape[2] + spec.out_channels
        if norm:
            total += shape[0]
    return total
