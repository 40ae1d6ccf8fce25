"""
Hinge adversarial objective with discriminator feature matching.

Expectations are means over batch and score-map time.
"""
from MelGAN.Algorithm.ops import add_all, affine, l1_mean, mean, relu
from MelGAN.Utils.errors import DimensionError

LAMBDA_FM = 10.0


def _scores(outputs):
    # accept either bare score maps or (score, features) pairs
    return [o[0] if isinstance(o, tuple) else o for o in outputs]


def _check_scale_count(real, fake, what):
    if len(real) != len(fake):
        raise DimensionError(what + ': real and fake scale counts differ', axis='scale',
                             expected=len(real), actual=len(fake))
    if not real:
        raise DimensionError(what + ': needs at least one scale', axis='scale', expected='>= 1', actual=0)


def discriminator_loss(real_scores, fake_scores):
    """
    ``sum_k mean(max(0, 1 - D_k(x))) + mean(max(0, 1 + D_k(G(s))))``.
    :param real_scores: score maps (or forward outputs) on real audio, one per scale
    :param fake_scores: score maps on generated audio, computed without a path into the generator
    :rtype: Tensor
    """
    real_scores, fake_scores = _scores(real_scores), _scores(fake_scores)
    _check_scale_count(real_scores, fake_scores, 'discriminator_loss')
    terms = []
    for k, (real, fake) in enumerate(zip(real_scores, fake_scores)):
        terms.append(mean(relu(affine(real, scale=-1.0, shift=1.0)), label='d_real.' + str(k)))
        terms.append(mean(relu(affine(fake, scale=1.0, shift=1.0)), label='d_fake.' + str(k)))
    return add_all(terms, label='d_loss')


def generator_adversarial_loss(fake_scores):
    """``sum_k mean(-D_k(G(s)))``"""
    fake_scores = _scores(fake_scores)
    if not fake_scores:
        raise DimensionError('generator_adversarial_loss needs at least one scale', axis='scale',
                             expected='>= 1', actual=0)
    return add_all([affine(mean(s), scale=-1.0, label='g_adv.' + str(k)) for k, s in enumerate(fake_scores)],
                   label='g_adv')


def feature_matching_loss(real_features, fake_features):
    """
    Sum over scales and layers of the element-mean L1 distance between
    discriminator activations. Real features must be constants.
    :param real_features: per scale, list of feature tensors
    :param fake_features: same layout, carrying the generator path
    :rtype: Tensor
    """
    _check_scale_count(real_features, fake_features, 'feature_matching_loss')
    terms = []
    for k, (real_layers, fake_layers) in enumerate(zip(real_features, fake_features)):
        if len(real_layers) != len(fake_layers):
            raise DimensionError('feature_matching_loss: layer counts differ at scale ' + str(k), axis='layer',
                                 expected=len(real_layers), actual=len(fake_layers))
        for i, (real, fake) in enumerate(zip(real_layers, fake_layers)):
            terms.append(l1_mean(real.detach(), fake, label='fm.' + str(k) + '.' + str(i)))
    return add_all(terms, label='g_fm')


def generator_total_loss(adv, fm, lam=LAMBDA_FM):
    """
    ``adv + lam * fm``
    :type adv: Tensor
    :type fm: Tensor
    :type lam: float
    :rtype: Tensor
    """
    if lam == 0:
        return adv
    return add_all([adv, affine(fm, scale=lam)], label='g_total')
