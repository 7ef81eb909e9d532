"""
管理命令测试：transform / bench / tables / disk_ft / helmholtz 的输出与退出码
"""

import csv
import io

import numpy as np
import pytest
from django.core.management import call_command
from django.core.management.base import CommandError

from core import benchmarks
from core.array_files import ArrayFile, read_array, write_array
from core.management.base import EXIT_NUMERICAL, EXIT_USAGE, parse_pair
from services.bounds import param_table
from services.errors import DomainError, ParameterError
from services.special import bessel_j, bessel_root
from services.transform import dht_direct


def run(name, **options):
    out = io.StringIO()
    call_command(name, stdout=out, **options)
    return out.getvalue()


def expect_exit(code, name, **options):
    with pytest.raises(CommandError) as info:
        run(name, **options)
    assert info.value.returncode == code
    return info.value


class TestArrayFiles:
    def test_format_detection(self, tmp_path):
        assert ArrayFile.detect_format(tmp_path / 'a.bin') == 'binary'
        assert ArrayFile.detect_format(tmp_path / 'a.F64') == 'binary'
        assert ArrayFile.detect_format(tmp_path / 'a.txt') == 'text'
        assert ArrayFile.detect_format(tmp_path / 'a') == 'text'
        with pytest.raises(ParameterError):
            ArrayFile.for_path(tmp_path / 'a.txt', 'hdf5')

    def test_text_skips_blank_lines(self, tmp_path):
        path = tmp_path / 'a.txt'
        path.write_text("1.5\n\n  2e-3 \n", encoding='utf-8')
        np.testing.assert_array_equal(read_array(path), [1.5, 2e-3])

    def test_bad_text_line(self, tmp_path):
        path = tmp_path / 'a.txt'
        path.write_text("1.0\nabc\n", encoding='utf-8')
        with pytest.raises(DomainError, match='a.txt:2'):
            read_array(path)

    def test_non_finite_text(self, tmp_path):
        path = tmp_path / 'a.txt'
        path.write_text("nan\n", encoding='utf-8')
        with pytest.raises(DomainError):
            read_array(path)

    def test_binary_length(self, tmp_path):
        path = tmp_path / 'a.bin'
        path.write_bytes(b'\x00' * 12)
        with pytest.raises(DomainError, match='multiple of 8'):
            read_array(path)

    def test_binary_is_little_endian_f64(self, tmp_path, rng):
        values = rng.standard_normal(17)
        path = tmp_path / 'a.bin'
        write_array(path, values)
        assert path.stat().st_size == 17 * 8
        np.testing.assert_array_equal(np.fromfile(path, dtype='<f8'), values)


class TestTransformCommand:
    def test_single_point(self, tmp_path):
        for name, value in (('freqs', 2.0), ('points', 0.5), ('coeffs', 1.0)):
            write_array(tmp_path / f'{name}.txt', [value])
        out = run('transform', nu=0, freqs=str(tmp_path / 'freqs.txt'), points=str(tmp_path / 'points.txt'),
                  coeffs=str(tmp_path / 'coeffs.txt'), out=str(tmp_path / 'g.txt'))
        assert 'wrote 1 values' in out
        assert read_array(tmp_path / 'g.txt')[0] == pytest.approx(bessel_j(0, 1.0), abs=1e-8)

    def test_text_and_binary_agree(self, tmp_path, rng):
        freqs = np.sort(rng.uniform(0, 300, 400))
        points = np.sort(rng.uniform(0, 1, 500))
        coeffs = rng.standard_normal(500)
        results = {}
        for ext in ('txt', 'bin'):
            paths = {}
            for name, values in (('freqs', freqs), ('points', points), ('coeffs', coeffs)):
                paths[name] = str(tmp_path / f'{name}.{ext}')
                write_array(paths[name], values)
            run('transform', nu=3, eps=1e-10, out=str(tmp_path / f'g.{ext}'), **paths)
            results[ext] = read_array(tmp_path / f'g.{ext}')
        np.testing.assert_array_equal(results['txt'], results['bin'])
        exact = dht_direct(3, freqs, points, coeffs)
        assert np.linalg.norm(results['txt'] - exact) <= 1e-9 * np.linalg.norm(exact)

    def test_explicit_format_overrides_extension(self, tmp_path, rng):
        paths = {}
        for name, size in (('freqs', 5), ('points', 4), ('coeffs', 4)):
            paths[name] = str(tmp_path / f'{name}.txt')
            write_array(paths[name], rng.uniform(0.1, 2, size), 'binary')
        run('transform', nu=1, out=str(tmp_path / 'g.txt'), format='binary', **paths)
        assert read_array(tmp_path / 'g.txt', 'binary').shape == (5,)

    def test_mismatched_lengths(self, tmp_path):
        write_array(tmp_path / 'freqs.txt', [1.0, 2.0])
        write_array(tmp_path / 'points.txt', [0.1, 0.2, 0.3])
        write_array(tmp_path / 'coeffs.txt', [1.0, 2.0])
        error = expect_exit(EXIT_USAGE, 'transform', nu=0, freqs=str(tmp_path / 'freqs.txt'),
                            points=str(tmp_path / 'points.txt'), coeffs=str(tmp_path / 'coeffs.txt'),
                            out=str(tmp_path / 'g.txt'))
        assert 'expected 3 coefficients' in str(error)

    def test_bad_order_and_tolerance(self, tmp_path):
        for name in ('freqs', 'points', 'coeffs'):
            write_array(tmp_path / f'{name}.txt', [1.0])
        paths = {name: str(tmp_path / f'{name}.txt') for name in ('freqs', 'points', 'coeffs')}
        expect_exit(EXIT_USAGE, 'transform', nu=101, out=str(tmp_path / 'g.txt'), **paths)
        expect_exit(EXIT_USAGE, 'transform', nu=0, eps=1e-2, out=str(tmp_path / 'g.txt'), **paths)

    def test_missing_file(self, tmp_path):
        expect_exit(EXIT_USAGE, 'transform', nu=0, freqs=str(tmp_path / 'none.txt'),
                    points=str(tmp_path / 'none.txt'), coeffs=str(tmp_path / 'none.txt'),
                    out=str(tmp_path / 'g.txt'))


class TestBenchCommand:
    @staticmethod
    def rows(text):
        return list(csv.DictReader(io.StringIO(text)))

    def test_n_scaling_rows(self):
        rows = self.rows(run('bench', experiment='n-scaling', max_n=512))
        assert len(rows) == 1
        assert rows[0]['n'] == '512'
        assert rows[0]['m'] == '1000'
        assert float(rows[0]['p']) == pytest.approx(1e5)
        assert rows[0]['rel_err'] == ''

    def test_header(self):
        text = run('bench', experiment='p-scaling', max_n=64)
        assert text.splitlines()[0] == 'experiment,n,m,p,nu,eps,time_ms,rel_err'
        rows = self.rows(text)
        assert len(rows) == 8
        assert float(rows[0]['p']) == pytest.approx(1e4)
        assert float(rows[-1]['p']) == pytest.approx(1e6)

    def test_accuracy_to_file(self, tmp_path):
        out = tmp_path / 'acc.csv'
        run('bench', experiment='accuracy', max_n=200, out=str(out), check=True)
        rows = self.rows(out.read_text(encoding='utf-8'))
        assert [row['eps'] for row in rows] == ['1e-04', '1e-06', '1e-08', '1e-10', '1e-12']
        for row in rows:
            assert float(row['rel_err']) <= 10 * float(row['eps'])

    def test_exp_points(self):
        rows = self.rows(run('bench', experiment='exp-points', max_n=256, eps=1e-8))
        assert rows[0]['n'] == rows[0]['m'] == '256'
        assert float(rows[0]['rel_err']) <= 1e-7

    def test_with_direct(self):
        rows = self.rows(run('bench', experiment='fourier-bessel', max_n=128, with_direct=True))
        assert [row['experiment'] for row in rows] == ['fourier-bessel', 'fourier-bessel:direct']

    def test_seed_is_reproducible(self):
        first = self.rows(run('bench', experiment='nu-sweep', max_n=64, seed=7))
        second = self.rows(run('bench', experiment='nu-sweep', max_n=64, seed=7))
        assert [row['rel_err'] for row in first] == [row['rel_err'] for row in second]

    def test_unknown_experiment(self):
        error = expect_exit(EXIT_USAGE, 'bench', experiment='nope')
        assert 'unknown experiment' in str(error)

    def test_check_fails_on_large_error(self, monkeypatch):
        monkeypatch.setattr(benchmarks, 'relative_error', lambda approx, exact: 0.5)
        expect_exit(EXIT_NUMERICAL, 'bench', experiment='accuracy', max_n=32, check=True)


class TestTablesCommand:
    def test_requires_an_action(self):
        expect_exit(EXIT_USAGE, 'tables')

    def test_dump_and_load(self, tmp_path):
        param_table.get(0, 1e-8)
        path = tmp_path / 'table.csv'
        out = run('tables', dump=str(path))
        count = len(param_table)
        assert f"dumped {count} rows" in out
        assert path.read_text(encoding='utf-8').splitlines()[0] == 'nu,eps_decade,M,z,L'
        assert f"loaded {count} rows" in run('tables', load=str(path))

    def test_load_rejects_bad_rows(self, tmp_path):
        path = tmp_path / 'bad.csv'
        path.write_text("nu,eps_decade,M,z,L\n0,-8,3,0.001,2\n", encoding='utf-8')
        expect_exit(EXIT_USAGE, 'tables', load=str(path))

    @pytest.mark.slow
    def test_warm(self):
        run('tables', warm=True)
        total = len(param_table)
        assert total >= 1212
        assert run('tables', warm=True).strip() == f'table warm: {total} rows (0 computed)'


class TestDiskCommand:
    def test_stdout_csv(self):
        rows = list(csv.DictReader(io.StringIO(run('disk_ft', omega_max=64.0, n=50))))
        assert len(rows) == 50
        assert float(rows[-1]['omega']) == 64.0
        assert max(float(row['abs_err']) for row in rows) <= 1e-12

    def test_out_file(self, tmp_path):
        out = run('disk_ft', omega_max=16.0, n=10, out=str(tmp_path / 'disk.csv'))
        assert out.startswith('max_abs_err=')
        assert (tmp_path / 'disk.csv').read_text(encoding='utf-8').startswith('omega,value,exact,abs_err')

    def test_bad_size(self):
        expect_exit(EXIT_USAGE, 'disk_ft', n=0)


class TestHelmholtzCommand:
    @staticmethod
    def metrics(text):
        return dict(line.split('=') for line in text.split())

    def test_manufactured(self, tmp_path):
        out = run('helmholtz', kappa=25.0, grid=16, out=str(tmp_path / 'u.csv'))
        metrics = self.metrics(out)
        assert float(metrics['rel_err']) <= 1e-6
        assert float(metrics['boundary_residual']) <= 1e-7
        lines = (tmp_path / 'u.csv').read_text(encoding='utf-8').splitlines()
        assert lines[0] == 'r,theta,re_u,im_u'
        assert len(lines) == 1 + 16 * 16

    def test_eigenmode_forcing(self):
        metrics = self.metrics(run('helmholtz', kappa=10.0, grid=8, forcing='mode', mode='1,2', eps=1e-10))
        assert float(metrics['rel_err']) <= 1e-8

    def test_resonance(self):
        kappa = bessel_root(0, 1)
        error = expect_exit(EXIT_NUMERICAL, 'helmholtz', kappa=kappa, grid=8)
        assert 'j=1, l=0' in str(error)

    def test_bad_mode(self):
        expect_exit(EXIT_USAGE, 'helmholtz', mode='two')
        expect_exit(EXIT_USAGE, 'helmholtz', mode='0,1')

    def test_parse_pair(self):
        assert parse_pair('3,-2', '--mode') == (3, -2)
