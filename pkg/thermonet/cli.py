# coding: utf-8
# vim:sw=4:ts=4:et:
"""Command line interface."""
import argparse
import json
import logging
import os
import sys

from thermonet import ThermoNet, __version__, load_config
from thermonet.const import (
    DEFAULT_OUTPUT_DIR, EXIT_CONFIG, EXIT_DATA, EXIT_GENERIC, EXIT_NUMERIC,
    EXIT_OK)
from thermonet.exceptions import (
    NUMERIC_ERRORS, ConfigError, DataError, ThermoNetError)

_LOGGER = logging.getLogger(__name__)


def _bar():
    print('---------------------------------')


def _parse_counts(text):
    """Return the internal-variable counts of '2-15' or '2,5,10'."""
    try:
        if '-' in text:
            low, high = text.split('-', 1)
            return list(range(int(low), int(high) + 1))
        return [int(item) for item in text.split(',') if item]
    except ValueError:
        raise argparse.ArgumentTypeError(
            'expected a range like 2-15 or a list like 2,5,10')


def build_parser():
    """Return the argument parser."""
    parser = argparse.ArgumentParser(
        prog='thermonet',
        description='Physics-informed constitutive modeling of fiber '
                    'reinforced epoxy',
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument('--version', action='version',
                        version='%(prog)s ' + __version__)
    parser.add_argument('-c', '--config', dest='config', type=str,
                        help='JSON run configuration')
    parser.add_argument('--quick', action='store_true', default=False,
                        help='use the reduced CI profile')
    parser.add_argument('--threads', type=int, default=None,
                        help='cap on worker processes and torch threads')
    parser.add_argument('--debug', action='store_true', default=False,
                        help='log at debug level')

    sub = parser.add_subparsers(dest='command', metavar='command')
    sub.required = True

    gen = sub.add_parser('gen-data', help='generate labeled sequences')
    gen.add_argument('out', help='training dataset file (.jsonl)')
    gen.add_argument('--extrapolation', action='store_true', default=False,
                     help='sample from the wider extrapolation bounds')
    gen.add_argument('--sequences', type=int, default=None,
                     help='override the training sequence count')
    gen.add_argument('--validation', type=int, default=None,
                     help='override the validation sequence count')

    trn = sub.add_parser('train', help='train the physics-informed model')
    trn.add_argument('dataset', help='training dataset file')
    trn.add_argument('model', help='checkpoint file to write')
    trn.add_argument('--history', default=None, help='history CSV file')
    trn.add_argument('--epochs', type=int, default=None,
                     help='override the epoch count')
    trn.add_argument('--resume', action='store_true', default=False,
                     help='continue from the checkpoint if present')

    evl = sub.add_parser('eval', help='print evaluation metrics')
    evl.add_argument('model', help='checkpoint file')
    evl.add_argument('dataset', help='dataset file')
    evl.add_argument('--out', default=None, help='metrics JSON file')

    swp = sub.add_parser('sweep-z', help='sweep the internal-variable count')
    swp.add_argument('dataset', help='training dataset file')
    swp.add_argument('--counts', type=_parse_counts, default='2-15',
                     help='counts as 2-15 or 2,5,10')
    swp.add_argument('--out', default=os.path.join(DEFAULT_OUTPUT_DIR,
                                                   'sweep.csv'))
    swp.add_argument('--epochs', type=int, default=None,
                     help='override the epoch count')

    prd = sub.add_parser('predict', help='write per-step predictions')
    prd.add_argument('model', help='checkpoint file')
    prd.add_argument('dataset', help='dataset file')
    prd.add_argument('--out-dir', dest='out_dir', default=DEFAULT_OUTPUT_DIR)

    crv = sub.add_parser('export-curves', help='write plotting tables')
    crv.add_argument('model', help='checkpoint file')
    crv.add_argument('dataset', help='dataset file')
    crv.add_argument('--index', type=int, default=0,
                     help='sequence index to export')
    crv.add_argument('--out-dir', dest='out_dir', default=DEFAULT_OUTPUT_DIR)
    return parser


def _overrides(args):
    """Return config block overrides from command line flags."""
    blocks = {}
    if getattr(args, 'sequences', None) is not None:
        blocks.setdefault('paths', {})['sequence_count'] = args.sequences
    if getattr(args, 'validation', None) is not None:
        blocks.setdefault('paths', {})['validation_count'] = args.validation
    if getattr(args, 'epochs', None) is not None:
        blocks.setdefault('training', {})['epochs'] = args.epochs
    return blocks


def _pipeline(args):
    blocks = load_config(args.config, 'quick' if args.quick else 'full')
    for name, values in _overrides(args).items():
        blocks[name].update(values)
    return ThermoNet(config=blocks, threads=args.threads)


def run(args):
    """Execute one parsed command."""
    net = _pipeline(args)
    if args.command == 'gen-data':
        train_set, val_set = net.generate_data(
            args.out, extrapolation=args.extrapolation)
        rates = [seq.rate for seq in train_set + val_set]
        _bar()
        print('training sequences:   {0}'.format(len(train_set)))
        print('validation sequences: {0}'.format(len(val_set)))
        if rates:
            print('strain rate range:    {0:.3e} .. {1:.3e}'.format(
                min(rates), max(rates)))
    elif args.command == 'train':
        _, history = net.train(args.dataset, args.model,
                               history_file=args.history, resume=args.resume)
        if history:
            print('final stress loss: {0:.6g}'.format(
                history[-1]['train_stress_loss']))
    elif args.command == 'eval':
        metrics = net.evaluate(args.model, args.dataset, args.out)
        print(json.dumps(metrics, indent=2, sort_keys=True))
    elif args.command == 'sweep-z':
        table = net.sweep(args.dataset, args.counts, args.out)
        print(table.to_string(index=False))
    elif args.command == 'predict':
        for filename in net.predict(args.model, args.dataset, args.out_dir):
            print(filename)
    elif args.command == 'export-curves':
        for filename in net.export_curves(args.model, args.dataset,
                                          index=args.index,
                                          output_dir=args.out_dir):
            print(filename)
    return EXIT_OK


def exit_code(error):
    """Return the exit code class of an error."""
    if isinstance(error, ConfigError):
        return EXIT_CONFIG
    if isinstance(error, DataError):
        return EXIT_DATA
    if isinstance(error, NUMERIC_ERRORS):
        return EXIT_NUMERIC
    return EXIT_GENERIC


def main(argv=None):
    """Entry point of the thermonet command."""
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.debug else logging.INFO,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        return run(args)
    except ThermoNetError as err:
        _LOGGER.error("%s", err)
        return exit_code(err)
    except (OSError, ValueError) as err:
        _LOGGER.error("%s", err)
        return EXIT_GENERIC


if __name__ == '__main__':
    sys.exit(main())
